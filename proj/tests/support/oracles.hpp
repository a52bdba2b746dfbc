#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "innoprod/panel.hpp"
#include "innoprod/treatment.hpp"

namespace innoprod::testing {

// Minimal valid record.
FirmYear record(const std::string& firm, int year, double employees = 10, double rnd = 0,
                const std::string& county = "A", const std::string& industry = "10");

// Random panel of `firms` firms over a few years with random counties,
// industries and R&D, plus its distance matrix.
std::pair<Panel, CountyDistanceMatrix> random_spillover_panel(std::mt19937_64& rng, int firms);

// Brute force over every ordered pair of records.
std::pair<std::vector<double>, std::vector<double>> spillover_double_loop(const Panel& panel,
                                                                           const CountyDistanceMatrix& dist);

// Random matching sample with coarse covariates so that distance ties occur.
MatchSample random_match_sample(std::mt19937_64& rng, std::size_t n, int covariates = 3);

struct MatchingOracle {
  double estimate = 0;
  double se = 0;
  std::size_t matches = 0;
  std::size_t units = 0;
  std::vector<std::vector<std::size_t>> matched;  // per sample unit, empty when unused
};

// Exhaustive nearest-neighbour matching: full sort of every candidate list.
MatchingOracle matching_oracle(const MatchSample& sample, const std::vector<int>& label, const MatchConfig& cfg);

// Upper tail of chi-square with one degree of freedom.
double chi2_1_upper(double c);

}  // namespace innoprod::testing
