#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace leqg::rng {

// One keyed block of the Philox4x32-10 counter-based generator
// (Salmon, Moraes, Dror, Shaw, SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

// A (seed, substream) pair addresses an independent random stream. Streams
// are cheap to construct, so per-sample substreams keyed by (seed, index)
// give bit-identical results no matter how work is split across threads.
class Stream {
public:
  Stream(std::uint64_t seed, std::uint64_t substream);

  double u01();     // uniform on (0, 1), 53-bit resolution
  double normal();  // standard normal via Box-Muller

private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t substream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Pairwise reduction in index order. The result is a pure function of the
// stored values, independent of how they were produced or partitioned.
double pairwise_sum(const std::vector<double>& values);
double pairwise_mean(const std::vector<double>& values);

}  // namespace leqg::rng
