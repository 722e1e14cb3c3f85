#include "advdist/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <thread>
#include <vector>

#include "advdist/format.hpp"

namespace advdist {

namespace {

constexpr std::size_t kMinSamples = 1000;

// Splits [0, n) into contiguous chunks; integer counts make the total
// independent of the chunking.
template <typename Counter>
std::size_t parallel_count(std::size_t n, Counter&& count_range) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(default_worker_count(), n / 4096 + 1));
  if (workers <= 1) return count_range(std::size_t{0}, n);
  std::vector<std::size_t> partial(workers, 0);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned t = 0; t < workers; ++t) {
    const std::size_t begin = std::min(n, t * chunk);
    const std::size_t end = std::min(n, begin + chunk);
    threads.emplace_back([&, t, begin, end] { partial[t] = count_range(begin, end); });
  }
  for (auto& th : threads) th.join();
  std::size_t total = 0;
  for (auto p : partial) total += p;
  return total;
}

MCEstimate make_estimate(std::size_t hits, std::size_t n, std::uint64_t seed) {
  MCEstimate est;
  est.n = n;
  est.seed = seed;
  est.mean = static_cast<double>(hits) / static_cast<double>(n);
  est.standard_error = std::sqrt(est.mean * (1.0 - est.mean) / static_cast<double>(n));
  return est;
}

}  // namespace

unsigned default_worker_count() { return std::max(1U, std::thread::hardware_concurrency()); }

MCEstimate mc_accuracy(const LinearClassifier& w, const PopulationSpec& spec, double eps,
                       const Eigen::VectorXd& delta, std::size_t n, std::uint64_t seed) {
  if (n < kMinSamples) throw std::invalid_argument("Monte Carlo estimate needs n >= 1000");
  if (w.dim() != spec.total_dim() || delta.size() != spec.total_dim())
    throw std::invalid_argument("classifier or direction dimension mismatch");
  const Sampler sampler(spec, seed);
  const Eigen::VectorXd shift = eps * delta;
  const std::size_t hits = parallel_count(n, [&](std::size_t begin, std::size_t end) {
    Eigen::VectorXd z(spec.total_dim());
    std::uint32_t group = 0;
    std::size_t correct = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const int y = sampler.draw(i, z, group);
      z -= y * shift;
      const int pred = z.dot(w.weights()) < 0.0 ? -1 : 1;
      correct += pred == y;
    }
    return correct;
  });
  return make_estimate(hits, n, seed);
}

MCEstimate mc_group_accuracy(const LinearClassifier& w, const PopulationSpec& spec, const GroupKey& g,
                             std::size_t n, std::uint64_t seed) {
  if (n < kMinSamples) throw std::invalid_argument("Monte Carlo estimate needs n >= 1000");
  if (w.dim() != spec.total_dim()) throw std::invalid_argument("classifier dimension mismatch");
  if (g.size() != spec.spurious_count()) throw std::invalid_argument("group key does not match population");
  const Sampler sampler(spec, seed);
  const std::uint32_t index = g.index();
  const std::size_t hits = parallel_count(n, [&](std::size_t begin, std::size_t end) {
    Eigen::VectorXd z(spec.total_dim());
    std::size_t correct = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const int y = sampler.draw_in_group(i, index, z);
      const int pred = z.dot(w.weights()) < 0.0 ? -1 : 1;
      correct += pred == y;
    }
    return correct;
  });
  return make_estimate(hits, n, seed);
}

double agreement_report(double closed, const MCEstimate& est) {
  if (est.n == 0) throw std::invalid_argument("empty Monte Carlo estimate");
  if (est.standard_error == 0.0) {
    if (est.mean == closed) return 0.0;
    throw std::domain_error("zero standard error with a mismatching closed form");
  }
  return (est.mean - closed) / est.standard_error;
}

void write_comparison_report(std::ostream& os, std::span<const Comparison> rows) {
  os << "label,closed,mc_mean,stderr,n,seed,z\n";
  for (const auto& r : rows) {
    os << r.label << ',' << format_double(r.closed) << ',' << format_double(r.estimate.mean) << ','
       << format_double(r.estimate.standard_error) << ',' << r.estimate.n << ',' << r.estimate.seed << ','
       << format_double(r.z) << '\n';
  }
}

}  // namespace advdist
