#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace litelab {

// Logical router identifier. Any non-empty byte string up to 255 bytes;
// integers, floats and names all live here as their literal text.
// Equality and ordering are plain byte-wise comparison.
class Vid {
 public:
  Vid() = default;
  explicit Vid(std::string v) : v_(std::move(v)) {}
  explicit Vid(std::string_view v) : v_(v) {}

  static constexpr size_t kMaxLen = 255;

  const std::string& str() const { return v_; }
  bool valid() const { return !v_.empty() && v_.size() <= kMaxLen; }
  bool empty() const { return v_.empty(); }

  auto operator<=>(const Vid&) const = default;

 private:
  std::string v_;
};

}  // namespace litelab
