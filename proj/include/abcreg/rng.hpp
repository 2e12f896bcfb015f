#pragma once

#include <cstdint>
#include <random>

namespace abcreg {

// Replication streams are derived as splitmix64(seed ^ replication index);
// each stream seeds an independent engine, so replications never share a
// generator sequence.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ index);
}

class Rng {
 public:
  explicit Rng(std::uint64_t stream) : eng_(stream) {}

  double uniform() { return unif_(eng_); }
  double normal() { return norm_(eng_); }
  double gamma(double shape, double scale) {
    std::gamma_distribution<double> g(shape, scale);
    return g(eng_);
  }
  // Raw Student-t with the given degrees of freedom.
  double student_t(double df) {
    std::student_t_distribution<double> t(df);
    return t(eng_);
  }
  // Unit-variance (standardized) Student-t; requires df > 2.
  double student_t_std(double df) {
    return student_t(df) / std::sqrt(df / (df - 2.0));
  }
  // Index draw from explicit probabilities (assumed to sum to 1).
  int categorical(const std::vector<double>& probs) {
    double u = uniform();
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < probs.size(); ++k) {
      acc += probs[k];
      if (u < acc) return static_cast<int>(k);
    }
    return static_cast<int>(probs.size()) - 1;
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
  std::normal_distribution<double> norm_{0.0, 1.0};
};

}  // namespace abcreg
