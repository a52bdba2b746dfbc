#pragma once

#include <vector>

#include "innoprod/panel.hpp"

namespace innoprod {

// Sum over other firms in the focal firm's industry and year of w * R / L,
// with w = 1 within a county and 1 / distance otherwise.
double intra_industry_knowledge(const FirmYear& focal, const Panel& panel, const CountyDistanceMatrix& dist);
// Same sum over firms of every other industry in the focal year.
double inter_industry_knowledge(const FirmYear& focal, const Panel& panel, const CountyDistanceMatrix& dist);

struct SpilloverMeasures {
  std::vector<double> intra;
  std::vector<double> inter;
};

// Both measures for every record, summed in canonical panel order.
SpilloverMeasures compute_spillovers(const Panel& panel, const CountyDistanceMatrix& dist);

// Copy of the panel with intra_rnd / inter_rnd filled and the matrix attached.
Panel attach_spillovers(const Panel& panel, std::shared_ptr<const CountyDistanceMatrix> dist);

}  // namespace innoprod
