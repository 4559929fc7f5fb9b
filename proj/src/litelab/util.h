#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace litelab {

using usec_t = int64_t;

// Monotonic wall clock in microseconds.
usec_t mono_now_us();

// Sleep helpers used by the real-time backend.
void sleep_us(usec_t us);

// Deterministic PRNG. Wraps mt19937_64 but owns the variate derivation so
// streams are identical on every platform (std distributions are not).
class Rng {
 public:
  explicit Rng(uint64_t seed = 0);

  uint64_t next_u64();
  // Uniform in [0, 1) with 53-bit resolution.
  double next_double();
  // Uniform integer in [0, n). n must be > 0.
  uint64_t next_below(uint64_t n);
  bool bernoulli(double p);

  // Engine state round-trips through a decimal string (used by migration).
  std::string save_state() const;
  bool load_state(const std::string& s);

 private:
  uint64_t s_[4];  // xoshiro256** state, seeded via splitmix64
};

// FNV-1a 64-bit, used for config hashes and seed derivation.
uint64_t fnv1a64(std::string_view data, uint64_t seed = 1469598103934665603ull);

// CSV field escaping per RFC 4180 (quote when needed).
std::string csv_escape(const std::string& field);

// Minimal ustar archive support, enough for job description archives.
// Only regular files and directories, names up to 100 chars.
std::string tar_pack(const std::map<std::string, std::string>& files);
std::optional<std::map<std::string, std::string>> tar_unpack(std::string_view blob,
                                                             std::string* err);

// Filesystem helpers.
bool read_file(const std::string& path, std::string* out);
bool write_file(const std::string& path, std::string_view data);
bool ensure_dir(const std::string& path);  // mkdir -p
// Reads a job archive from a directory tree or a tar file into (relpath -> bytes).
std::optional<std::map<std::string, std::string>> load_archive(const std::string& path,
                                                               std::string* err);

// Split/trim/parse helpers for the line-oriented grammars.
std::vector<std::string> split_ws(std::string_view line);
std::vector<std::string> split_on(std::string_view s, char sep);
std::string_view trim(std::string_view s);
std::optional<double> parse_double(std::string_view s);
std::optional<int64_t> parse_int(std::string_view s);

// Least-squares fit y = a + b*x; returns (a, b, r_squared).
struct LinearFit {
  double intercept = 0;
  double slope = 0;
  double r2 = 0;
};
LinearFit fit_linear(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace litelab
