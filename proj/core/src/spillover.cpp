#include "innoprod/spillover.hpp"

#include <fmt/format.h>

#include <map>

#include "innoprod/error.hpp"
#include "innoprod/parallel.hpp"

namespace innoprod {

namespace {

struct Source {
  std::size_t firm;
  std::size_t county;
  const std::string* industry;
  double intensity;
};

double weight(const CountyDistanceMatrix& dist, std::size_t a, std::size_t b) {
  return a == b ? 1.0 : 1.0 / dist.distance(a, b);
}

double intensity(const FirmYear& r) {
  if (!(r.rnd >= 0) || !(r.employees > 0)) {
    throw ValidationError(record_label(r) + ": R&D intensity needs rnd >= 0 and employees > 0", {record_label(r)});
  }
  return r.rnd / r.employees;
}

// Accumulates the two sums for one focal record over `sources` (same year,
// canonical order).
std::pair<double, double> accumulate(const FirmYear& focal, std::size_t focal_firm, std::size_t focal_county,
                                     const std::vector<Source>& sources, const CountyDistanceMatrix& dist) {
  double intra = 0;
  double inter = 0;
  for (const auto& s : sources) {
    if (s.firm == focal_firm) continue;
    const double contribution = weight(dist, focal_county, s.county) * s.intensity;
    if (*s.industry == focal.industry) {
      intra += contribution;
    } else {
      inter += contribution;
    }
  }
  return {intra, inter};
}

std::vector<Source> year_sources(const Panel& panel, int year, const CountyDistanceMatrix& dist) {
  std::vector<Source> out;
  for (std::size_t i = 0; i < panel.size(); ++i) {
    const auto& r = panel[i];
    if (r.year != year) continue;
    out.push_back({panel.firm_of(i), dist.index_of(r.county), &r.industry, intensity(r)});
  }
  return out;
}

std::size_t firm_index(const FirmYear& focal, const Panel& panel) {
  for (std::size_t f = 0; f < panel.firms().size(); ++f) {
    if (panel.firms()[f].firm_id == focal.firm_id) return f;
  }
  return panel.firms().size();
}

}  // namespace

double intra_industry_knowledge(const FirmYear& focal, const Panel& panel, const CountyDistanceMatrix& dist) {
  return accumulate(focal, firm_index(focal, panel), dist.index_of(focal.county),
                    year_sources(panel, focal.year, dist), dist)
      .first;
}

double inter_industry_knowledge(const FirmYear& focal, const Panel& panel, const CountyDistanceMatrix& dist) {
  return accumulate(focal, firm_index(focal, panel), dist.index_of(focal.county),
                    year_sources(panel, focal.year, dist), dist)
      .second;
}

SpilloverMeasures compute_spillovers(const Panel& panel, const CountyDistanceMatrix& dist) {
  std::map<int, std::vector<Source>> by_year;
  std::vector<std::size_t> county(panel.size());
  for (std::size_t i = 0; i < panel.size(); ++i) {
    const auto& r = panel[i];
    county[i] = dist.index_of(r.county);
    by_year[r.year].push_back({panel.firm_of(i), county[i], &r.industry, intensity(r)});
  }
  SpilloverMeasures out;
  out.intra.resize(panel.size());
  out.inter.resize(panel.size());
  parallel_for(panel.size(), [&](std::size_t i) {
    auto [intra, inter] = accumulate(panel[i], panel.firm_of(i), county[i], by_year.at(panel[i].year), dist);
    out.intra[i] = intra;
    out.inter[i] = inter;
  });
  return out;
}

Panel attach_spillovers(const Panel& panel, std::shared_ptr<const CountyDistanceMatrix> dist) {
  if (!dist) throw DependencyError("spillovers need a county distance matrix");
  const auto m = compute_spillovers(panel, *dist);
  std::vector<FirmYear> records(panel.records().begin(), panel.records().end());
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].intra_rnd = m.intra[i];
    records[i].inter_rnd = m.inter[i];
  }
  return Panel::from_records(std::move(records), panel.wave_spacing(), std::move(dist));
}

}  // namespace innoprod
