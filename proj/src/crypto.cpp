#include "pathoram/crypto.hpp"

#include <openssl/evp.h>

#include <cstring>

#include "pathoram/errors.hpp"

namespace pathoram {

namespace {

constexpr std::uint8_t kLeafPrefix = 0x00;
constexpr std::uint8_t kNodePrefix = 0x01;

void put_u64_le(std::uint8_t* out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

std::uint64_t get_u64_le(const std::uint8_t* in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[i]) << (8 * i);
  return v;
}

}  // namespace

struct BucketCipher::Impl {
  Key key;
  EVP_CIPHER_CTX* enc = nullptr;  // keyed once; per-seal init only swaps the IV
  EVP_CIPHER_CTX* dec = nullptr;
  ~Impl() {
    if (enc) EVP_CIPHER_CTX_free(enc);
    if (dec) EVP_CIPHER_CTX_free(dec);
  }
};

BucketCipher::BucketCipher(const Key& key, std::uint32_t slots, std::uint32_t block_size)
    : impl_(std::make_unique<Impl>()), slots_(slots), block_size_(block_size) {
  impl_->key = key;
  impl_->enc = EVP_CIPHER_CTX_new();
  impl_->dec = EVP_CIPHER_CTX_new();
  if (!impl_->enc || !impl_->dec ||
      EVP_EncryptInit_ex(impl_->enc, EVP_aes_256_gcm(), nullptr, impl_->key.data(),
                         nullptr) != 1 ||
      EVP_DecryptInit_ex(impl_->dec, EVP_aes_256_gcm(), nullptr, impl_->key.data(),
                         nullptr) != 1) {
    throw Error("AES-GCM context setup failed");
  }
}

BucketCipher::~BucketCipher() = default;

BucketCipher::BucketCipher(BucketCipher&&) noexcept = default;
BucketCipher& BucketCipher::operator=(BucketCipher&&) noexcept = default;

Bytes BucketCipher::seal(const PlainBucket& bucket, RandomSource& rng) const {
  if (bucket.slot_count() != slots_ || bucket.block_size() != block_size_) {
    throw SerializationError("bucket shape does not match cipher parameters");
  }
  const std::size_t plain_size = plain_bucket_size(slots_, block_size_);
  Bytes plain(plain_size);
  std::size_t off = 0;
  for (std::uint32_t i = 0; i < slots_; ++i) {
    if (bucket.is_real(i)) {
      plain[off] = 1;
      put_u64_le(plain.data() + off + 1, bucket.id_at(i));
      std::memcpy(plain.data() + off + 9, bucket.data_at(i).data(), block_size_);
    } else {
      // Random filler keeps the plaintext free of structure; the flag byte is
      // what distinguishes dummies on open.
      rng.fill({plain.data() + off + 1, 8 + block_size_});
      plain[off] = 0;
    }
    off += 9 + block_size_;
  }

  Bytes record(record_size());
  rng.fill({record.data(), kNonceSize});

  EVP_CIPHER_CTX* ctx = impl_->enc;
  int len = 0;
  if (EVP_EncryptInit_ex(ctx, nullptr, nullptr, nullptr, record.data()) != 1 ||
      EVP_EncryptUpdate(ctx, record.data() + kNonceSize, &len, plain.data(),
                        static_cast<int>(plain.size())) != 1) {
    throw Error("AES-GCM encryption failed");
  }
  int fin = 0;
  if (EVP_EncryptFinal_ex(ctx, record.data() + kNonceSize + len, &fin) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_GET_TAG, kTagSize,
                          record.data() + kNonceSize + plain.size()) != 1) {
    throw Error("AES-GCM encryption failed");
  }
  return record;
}

PlainBucket BucketCipher::open(std::span<const std::uint8_t> record) const {
  if (record.size() != record_size()) {
    throw FramingError("sealed record has wrong size: got " +
                       std::to_string(record.size()) + ", want " +
                       std::to_string(record_size()));
  }
  const std::size_t plain_size = plain_bucket_size(slots_, block_size_);
  Bytes plain(plain_size);
  Bytes tag(record.end() - kTagSize, record.end());

  EVP_CIPHER_CTX* ctx = impl_->dec;
  int len = 0;
  if (EVP_DecryptInit_ex(ctx, nullptr, nullptr, nullptr, record.data()) != 1 ||
      EVP_DecryptUpdate(ctx, plain.data(), &len, record.data() + kNonceSize,
                        static_cast<int>(plain_size)) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_SET_TAG, kTagSize, tag.data()) != 1) {
    throw Error("AES-GCM decryption failed");
  }
  int fin = 0;
  if (EVP_DecryptFinal_ex(ctx, plain.data() + len, &fin) != 1) {
    // Rekey the context so the failure leaves no residual state behind.
    EVP_DecryptInit_ex(ctx, EVP_aes_256_gcm(), nullptr, impl_->key.data(), nullptr);
    throw IntegrityError("bucket authentication failed");
  }

  PlainBucket bucket(slots_, block_size_);
  std::size_t off = 0;
  for (std::uint32_t i = 0; i < slots_; ++i) {
    if (plain[off] == 1) {
      BlockId id = get_u64_le(plain.data() + off + 1);
      bucket.place(i, id, Bytes(plain.begin() + off + 9, plain.begin() + off + 9 + block_size_));
    }
    off += 9 + block_size_;
  }
  return bucket;
}

Digest sha256(std::span<const std::uint8_t> data) {
  Digest out;
  unsigned int n = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &n, EVP_sha256(), nullptr) != 1 ||
      n != kDigestSize) {
    throw Error("SHA-256 failed");
  }
  return out;
}

Digest merkle_leaf_digest(std::span<const std::uint8_t> record) {
  Bytes buf(1 + record.size());
  buf[0] = kLeafPrefix;
  std::memcpy(buf.data() + 1, record.data(), record.size());
  return sha256(buf);
}

Digest merkle_node_digest(std::span<const std::uint8_t> record, const Digest& left,
                          const Digest& right) {
  Bytes buf(1 + record.size() + 2 * kDigestSize);
  buf[0] = kNodePrefix;
  std::memcpy(buf.data() + 1, record.data(), record.size());
  std::memcpy(buf.data() + 1 + record.size(), left.data(), kDigestSize);
  std::memcpy(buf.data() + 1 + record.size() + kDigestSize, right.data(), kDigestSize);
  return sha256(buf);
}

Digest merkle_path_root(const TreeGeometry& g, Leaf leaf,
                        std::span<const Bytes> path_records,
                        std::span<const Digest> sibling_digests) {
  if (path_records.size() != g.height + 1u) {
    throw PreconditionError("expected L+1 path records");
  }
  if (sibling_digests.size() != g.height) {
    throw PreconditionError("expected L sibling digests");
  }
  Digest d = merkle_leaf_digest(path_records[g.height]);
  for (std::uint32_t level = g.height; level >= 1; --level) {
    const BucketIndex child = path_bucket_index(g, leaf, level);
    const Digest& sib = sibling_digests[level - 1];
    const Bytes& parent_record = path_records[level - 1];
    d = is_left_child(child) ? merkle_node_digest(parent_record, d, sib)
                             : merkle_node_digest(parent_record, sib, d);
  }
  return d;
}

void MerkleState::verify_path(const TreeGeometry& g, Leaf leaf,
                              std::span<const Bytes> path_records,
                              std::span<const Digest> sibling_digests) const {
  if (merkle_path_root(g, leaf, path_records, sibling_digests) != root_) {
    throw IntegrityError("Merkle root mismatch on path to leaf " + std::to_string(leaf));
  }
}

void MerkleState::update_path(const TreeGeometry& g, Leaf leaf,
                              std::span<const Bytes> new_records,
                              std::span<const Digest> sibling_digests) {
  root_ = merkle_path_root(g, leaf, new_records, sibling_digests);
}

}  // namespace pathoram
