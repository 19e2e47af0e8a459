#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <tuple>
#include <vector>
#include <string>

#include "kgns/data.hpp"

namespace kgns::test {

class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 gen(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() / ("kgns-test-" + std::to_string(gen()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Random KG over `entities` entities and `relations` relations; every entity and
// relation appears in train so the vocabulary is fixed by it.
inline void write_random_kg(const std::filesystem::path& dir, std::size_t entities, std::size_t relations,
                            std::size_t train, std::size_t valid, std::size_t test, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pe(0, entities - 1), pr(0, relations - 1);
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> seen;
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> all;
  for (std::size_t e = 0; e < entities; ++e) {
    auto t = std::make_tuple(e, e % relations, (e + 1) % entities);
    if (seen.insert(t).second) all.push_back(t);
  }
  for (std::size_t r = 0; r < relations; ++r) {
    auto t = std::make_tuple(r % entities, r, (r + 2) % entities);
    if (seen.insert(t).second) all.push_back(t);
  }
  const std::size_t total = train + valid + test;
  while (all.size() < total) {
    auto t = std::make_tuple(pe(rng), pr(rng), pe(rng));
    if (seen.insert(t).second) all.push_back(t);
  }
  auto dump = [&](const char* name, std::size_t from, std::size_t to) {
    std::ofstream out(dir / name);
    for (std::size_t i = from; i < to; ++i) {
      const auto& [h, r, t] = all[i];
      out << "e" << h << "\tr" << r << "\te" << t << "\n";
    }
  };
  dump("train.txt", 0, all.size() - valid - test);
  dump("valid.txt", all.size() - valid - test, all.size() - test);
  dump("test.txt", all.size() - test, all.size());
}

}  // namespace kgns::test
