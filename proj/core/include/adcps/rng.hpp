#pragma once

#include <cstdint>

namespace adcps {

// Counter-based pseudo-random stream keyed by (master seed, stream id).
// Streams with distinct ids are statistically independent, so scenario
// cells can draw in any order (or concurrently) and still reproduce
// byte-for-byte from the master seed.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

  std::uint64_t next_u64();

  // Uniform on [0, 1).
  double next_unit();

  // Standard normal via Box-Muller; the spare draw is cached per stream.
  double next_gaussian();

  // Child stream derived from this stream's key. Advancing either stream
  // leaves the other untouched.
  RngStream substream(std::uint64_t child_id) const;

 private:
  explicit RngStream(std::uint64_t key);

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace adcps
