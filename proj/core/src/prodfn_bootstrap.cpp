#include <spdlog/spdlog.h>

#include <random>

#include "innoprod/error.hpp"
#include "innoprod/parallel.hpp"
#include "innoprod/prodfn.hpp"

namespace innoprod {

namespace {

Panel resample_firms(const Panel& panel, std::mt19937_64& rng) {
  const auto firms = panel.firms();
  std::uniform_int_distribution<std::size_t> pick(0, firms.size() - 1);
  std::vector<std::size_t> draws(firms.size());
  std::vector<std::size_t> times(firms.size(), 0);
  std::vector<FirmYear> records;
  records.reserve(panel.size());
  for (std::size_t f = 0; f < firms.size(); ++f) {
    const std::size_t j = pick(rng);
    const std::size_t copy = times[j]++;
    for (const auto& r : panel.firm_records(firms[j])) {
      records.push_back(r);
      if (copy > 0) records.back().firm_id = r.firm_id + "#" + std::to_string(copy);
    }
  }
  return panel.with_records(std::move(records));
}

}  // namespace

BootstrapResult bootstrap(const Panel& panel, const EstimationSpec& spec, const EstimationResult& base) {
  if (spec.bootstrap < 1) throw ValidationError("bootstrap replications must be >= 1");
  const Eigen::Index k = base.coef.size();
  BootstrapResult out;
  if (spec.bootstrap == 1) {
    spdlog::warn("bootstrap with a single replicate: variance set to zero, inference is degenerate");
    out.variance = MatrixXd::Zero(k, k);
    out.se = VectorXd::Zero(k);
    out.replicates = 1;
    out.degenerate = true;
    return out;
  }

  EstimationSpec rep = spec;
  rep.variance = VarianceMethod::kNone;
  rep.starts = 1;
  const Eigen::Index offset = base.estimator == EstimatorKind::kOp ? 2 : 0;
  rep.start = VectorXd(base.coef.tail(k - offset));

  const auto B = static_cast<std::size_t>(spec.bootstrap);
  MatrixXd draws(k, static_cast<Eigen::Index>(B));
  std::vector<std::uint8_t> ok(B, 0);
  parallel_for(B, [&](std::size_t b) {
    std::seed_seq seq{static_cast<std::uint64_t>(spec.seed), static_cast<std::uint64_t>(b)};
    std::mt19937_64 rng(seq);
    try {
      const Panel sample = resample_firms(panel, rng);
      const auto res = estimate(sample, rep);
      if (res.coef.size() == k && res.coef.allFinite()) {
        draws.col(static_cast<Eigen::Index>(b)) = res.coef;
        ok[b] = 1;
      }
    } catch (const Error& e) {
      spdlog::debug("bootstrap replicate {} failed: {}", b, e.what());
    }
  });

  std::vector<Eigen::Index> good;
  for (std::size_t b = 0; b < B; ++b) {
    if (ok[b]) good.push_back(static_cast<Eigen::Index>(b));
  }
  out.replicates = good.size();
  out.failed = B - good.size();
  if (static_cast<double>(out.failed) > 0.2 * static_cast<double>(B)) {
    throw InferenceError(fmt::format("{} of {} bootstrap replicates failed; inference is unreliable", out.failed, B));
  }
  if (out.failed > 0) spdlog::warn("{} of {} bootstrap replicates failed and were dropped", out.failed, B);
  if (good.size() < 2) {
    out.variance = MatrixXd::Zero(k, k);
    out.se = VectorXd::Zero(k);
    out.degenerate = true;
    return out;
  }
  const MatrixXd kept = draws(Eigen::all, good);
  out.variance = sample_covariance(kept.transpose());
  out.se = out.variance.diagonal().cwiseMax(0.0).cwiseSqrt();
  return out;
}

}  // namespace innoprod
