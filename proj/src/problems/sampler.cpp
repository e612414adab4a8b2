#include "obstacle/problems/sampler.hpp"

#include <string>

namespace obstacle::problems {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::size_t kMaxRejectionsPerPoint = 1000;

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k) {
  std::uint64_t state = seed ^ (k * 0x9e3779b97f4a7c15ULL);
  splitmix64(state);
  return splitmix64(state);
}

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t state = seed;
  const std::uint64_t a = splitmix64(state);
  state ^= stream * 0xd1b54a32d192ed03ULL;
  const std::uint64_t b = splitmix64(state);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::vector<std::array<double, ad::kMaxDim>> sample_uniform(const Domain& domain, std::size_t m,
                                                            std::mt19937_64& rng) {
  if (m < 1) throw SamplingError("batch size must be >= 1");
  std::vector<std::array<double, ad::kMaxDim>> out;
  out.reserve(m);
  const auto lo = domain.box_lower();
  const auto hi = domain.box_upper();
  std::size_t attempts = 0;
  const std::size_t budget = kMaxRejectionsPerPoint * m;
  while (out.size() < m) {
    if (++attempts > budget)
      throw SamplingError("rejection sampling accepted " + std::to_string(out.size()) + " of " +
                          std::to_string(m) + " points in " + std::to_string(budget) + " draws");
    std::array<double, ad::kMaxDim> x{};
    for (int i = 0; i < domain.dim; ++i) {
      const auto k = static_cast<std::size_t>(i);
      x[k] = lo[k] + (hi[k] - lo[k]) * unit_uniform(rng);
    }
    if (domain.contains(Point(x.data(), static_cast<std::size_t>(domain.dim)))) out.push_back(x);
  }
  return out;
}

SamplePoint make_sample(const ProblemSpec& problem, Point x, int jet_order) {
  SamplePoint s;
  const int d = static_cast<int>(x.size());
  for (int i = 0; i < d; ++i) s.x[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)];
  s.source = problem.source(x);
  s.target = problem.target(x);
  s.mask = problem.mask(x, jet_order);
  s.obstacle = problem.obstacle ? problem.obstacle(x, jet_order) : SpatialJet<double>::constant(0.0, d, jet_order);
  return s;
}

SampleBatch sample_batch(const ProblemSpec& problem, std::size_t m, std::mt19937_64& rng, int jet_order) {
  SampleBatch batch;
  batch.dim = problem.domain.dim;
  const auto pts = sample_uniform(problem.domain, m, rng);
  batch.points.reserve(pts.size());
  for (const auto& p : pts)
    batch.points.push_back(make_sample(problem, Point(p.data(), static_cast<std::size_t>(batch.dim)), jet_order));
  return batch;
}

}  // namespace obstacle::problems
