#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "obstacle/problems/problem.hpp"

namespace obstacle::problems {

/// One collocation point with the problem data the integrands need cached.
struct SamplePoint {
  std::array<double, ad::kMaxDim> x{};
  double source = 0.0;
  double target = 0.0;
  SpatialJet<double> mask;
  SpatialJet<double> obstacle;  // zero jet when the obstacle is a network

  Point point(int dim) const { return Point(x.data(), static_cast<std::size_t>(dim)); }
};

struct SampleBatch {
  int dim = 2;
  std::vector<SamplePoint> points;

  std::size_t size() const { return points.size(); }
};

class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Independent generator for substream `stream` of `seed`. Streams are
/// derived by SplitMix64 mixing, so distinct (seed, stream) pairs give
/// unrelated sequences and a stream can be regenerated without replaying
/// earlier ones.
/// Independent child seed k of a run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k);

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream);

/// Uniform double in [0, 1) from the top 53 bits.
double unit_uniform(std::mt19937_64& rng);

/// m i.i.d. points uniform on the open domain; rejection sampling from the
/// bounding box for non-rectangular domains.
std::vector<std::array<double, ad::kMaxDim>> sample_uniform(const Domain& domain, std::size_t m,
                                                            std::mt19937_64& rng);

SamplePoint make_sample(const ProblemSpec& problem, Point x, int jet_order);

/// Samples and caches problem data with jets of the requested order.
SampleBatch sample_batch(const ProblemSpec& problem, std::size_t m, std::mt19937_64& rng, int jet_order);

}  // namespace obstacle::problems
