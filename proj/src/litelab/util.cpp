#include "litelab/util.h"

#include <sys/stat.h>
#include <time.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <dirent.h>
#include <fstream>
#include <sstream>

namespace litelab {

usec_t mono_now_us() {
  timespec ts;
  clock_gettime(CLOCK_MONOTONIC, &ts);
  return ts.tv_sec * 1000000LL + ts.tv_nsec / 1000;
}

void sleep_us(usec_t us) {
  if (us <= 0) return;
  timespec ts{us / 1000000, (us % 1000000) * 1000};
  nanosleep(&ts, nullptr);
}

static uint64_t splitmix64(uint64_t& x) {
  x += 0x9e3779b97f4a7c15ull;
  uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

Rng::Rng(uint64_t seed) {
  uint64_t x = seed;
  for (auto& w : s_) w = splitmix64(x);
}

static inline uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

uint64_t Rng::next_u64() {
  // xoshiro256**
  uint64_t result = rotl(s_[1] * 5, 7) * 9;
  uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

uint64_t Rng::next_below(uint64_t n) {
  // Rejection-free multiply-shift; bias is < 2^-64 per draw, deterministic.
  unsigned __int128 m = (unsigned __int128)next_u64() * n;
  return (uint64_t)(m >> 64);
}

bool Rng::bernoulli(double p) {
  if (p <= 0) return false;
  if (p >= 1) return true;
  return next_double() < p;
}

std::string Rng::save_state() const {
  char buf[128];
  snprintf(buf, sizeof buf, "%llu %llu %llu %llu", (unsigned long long)s_[0],
           (unsigned long long)s_[1], (unsigned long long)s_[2], (unsigned long long)s_[3]);
  return buf;
}

bool Rng::load_state(const std::string& s) {
  unsigned long long w[4];
  if (sscanf(s.c_str(), "%llu %llu %llu %llu", &w[0], &w[1], &w[2], &w[3]) != 4) return false;
  for (int i = 0; i < 4; i++) s_[i] = w[i];
  return true;
}

uint64_t fnv1a64(std::string_view data, uint64_t seed) {
  uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

// ---- ustar ----

static void tar_num(char* dst, size_t len, uint64_t v) {
  snprintf(dst, len, "%0*llo", (int)len - 1, (unsigned long long)v);
}

static std::string tar_header(const std::string& name, uint64_t size, bool dir) {
  std::string h(512, '\0');
  snprintf(&h[0], 100, "%s", name.c_str());
  tar_num(&h[100], 8, dir ? 0755 : 0644);  // mode
  tar_num(&h[108], 8, 0);                  // uid
  tar_num(&h[116], 8, 0);                  // gid
  tar_num(&h[124], 12, size);
  tar_num(&h[136], 12, 0);  // mtime
  memset(&h[148], ' ', 8);  // checksum placeholder
  h[156] = dir ? '5' : '0';
  memcpy(&h[257], "ustar", 5);
  h[263] = '0';
  h[264] = '0';
  unsigned sum = 0;
  for (unsigned char c : h) sum += c;
  snprintf(&h[148], 8, "%06o", sum);
  h[155] = ' ';
  return h;
}

std::string tar_pack(const std::map<std::string, std::string>& files) {
  std::string out;
  for (const auto& [name, data] : files) {
    out += tar_header(name, data.size(), false);
    out += data;
    size_t pad = (512 - data.size() % 512) % 512;
    out.append(pad, '\0');
  }
  out.append(1024, '\0');
  return out;
}

std::optional<std::map<std::string, std::string>> tar_unpack(std::string_view blob,
                                                             std::string* err) {
  std::map<std::string, std::string> out;
  size_t off = 0;
  while (off + 512 <= blob.size()) {
    std::string_view hdr = blob.substr(off, 512);
    if (hdr.find_first_not_of('\0') == std::string_view::npos) break;  // end blocks
    char namebuf[101] = {0};
    memcpy(namebuf, hdr.data(), 100);
    std::string name = namebuf;
    char sizebuf[13] = {0};
    memcpy(sizebuf, hdr.data() + 124, 12);
    uint64_t size = strtoull(sizebuf, nullptr, 8);
    char type = hdr[156];
    off += 512;
    if (type == '0' || type == '\0') {
      if (off + size > blob.size()) {
        if (err) *err = "truncated tar entry: " + name;
        return std::nullopt;
      }
      out[name] = std::string(blob.substr(off, size));
      off += size + (512 - size % 512) % 512;
    } else if (type == '5') {
      // directory entry, nothing to store
    } else {
      if (err) *err = "unsupported tar entry type for " + name;
      return std::nullopt;
    }
  }
  return out;
}

bool read_file(const std::string& path, std::string* out) {
  std::ifstream f(path, std::ios::binary);
  if (!f) return false;
  std::ostringstream ss;
  ss << f.rdbuf();
  *out = ss.str();
  return true;
}

bool write_file(const std::string& path, std::string_view data) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) return false;
  f.write(data.data(), (std::streamsize)data.size());
  return f.good();
}

bool ensure_dir(const std::string& path) {
  std::string cur;
  for (size_t i = 0; i <= path.size(); i++) {
    if (i == path.size() || path[i] == '/') {
      if (!cur.empty() && mkdir(cur.c_str(), 0755) != 0 && errno != EEXIST) return false;
    }
    if (i < path.size()) cur += path[i];
  }
  return true;
}

static void collect_dir(const std::string& root, const std::string& rel,
                        std::map<std::string, std::string>* out) {
  std::string full = rel.empty() ? root : root + "/" + rel;
  DIR* d = opendir(full.c_str());
  if (!d) return;
  while (dirent* e = readdir(d)) {
    std::string n = e->d_name;
    if (n == "." || n == "..") continue;
    std::string childrel = rel.empty() ? n : rel + "/" + n;
    std::string childfull = root + "/" + childrel;
    struct stat st;
    if (stat(childfull.c_str(), &st) != 0) continue;
    if (S_ISDIR(st.st_mode)) {
      collect_dir(root, childrel, out);
    } else if (S_ISREG(st.st_mode)) {
      std::string data;
      if (read_file(childfull, &data)) (*out)[childrel] = std::move(data);
    }
  }
  closedir(d);
}

std::optional<std::map<std::string, std::string>> load_archive(const std::string& path,
                                                               std::string* err) {
  struct stat st;
  if (stat(path.c_str(), &st) != 0) {
    if (err) *err = "no such file or directory: " + path;
    return std::nullopt;
  }
  if (S_ISDIR(st.st_mode)) {
    std::map<std::string, std::string> out;
    collect_dir(path, "", &out);
    if (out.empty()) {
      if (err) *err = "archive directory is empty: " + path;
      return std::nullopt;
    }
    return out;
  }
  std::string blob;
  if (!read_file(path, &blob)) {
    if (err) *err = "cannot read " + path;
    return std::nullopt;
  }
  return tar_unpack(blob, err);
}

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && isspace((unsigned char)line[i])) i++;
    size_t j = i;
    while (j < line.size() && !isspace((unsigned char)line[j])) j++;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string> split_on(std::string_view s, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  for (size_t i = 0; i <= s.size(); i++) {
    if (i == s.size() || s[i] == sep) {
      out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && isspace((unsigned char)s.front())) s.remove_prefix(1);
  while (!s.empty() && isspace((unsigned char)s.back())) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::string buf(s);
  char* end = nullptr;
  double v = strtod(buf.c_str(), &end);
  if (end != buf.c_str() + buf.size()) return std::nullopt;
  return v;
}

std::optional<int64_t> parse_int(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::string buf(s);
  char* end = nullptr;
  long long v = strtoll(buf.c_str(), &end, 10);
  if (end != buf.c_str() + buf.size()) return std::nullopt;
  return v;
}

LinearFit fit_linear(const std::vector<double>& x, const std::vector<double>& y) {
  LinearFit f;
  size_t n = std::min(x.size(), y.size());
  if (n < 2) return f;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; i++) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  double den = n * sxx - sx * sx;
  if (den == 0) return f;
  f.slope = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / n;
  double ss_res = 0, ss_tot = 0, mean = sy / n;
  for (size_t i = 0; i < n; i++) {
    double pred = f.intercept + f.slope * x[i];
    ss_res += (y[i] - pred) * (y[i] - pred);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  f.r2 = ss_tot == 0 ? 1.0 : 1.0 - ss_res / ss_tot;
  return f;
}

}  // namespace litelab
