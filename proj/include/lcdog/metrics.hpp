#pragma once

#include <stdexcept>

#include "lcdog/geometry.hpp"
#include "lcdog/grid.hpp"

namespace lcdog {

struct EvalReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double iou = 0.0;
  long long tp = 0;
  long long fp = 0;
  long long fn = 0;
  long long tn = 0;
  long long n_los = 0;
  double horizon = 0.0;
};

class EmptyEvaluation : public std::runtime_error {
 public:
  EmptyEvaluation() : std::runtime_error("evaluation mask selects no cells") {}
};

/// omega >= tau.
CellMask binarize(const DynamicOccupancyGrid& grid, double tau = 0.5);

/// Confusion counts and scores over cells where `los` is set. When neither
/// prediction nor truth has a positive, precision/recall/f1/iou are 1.
EvalReport eval_forecast(const CellMask& pred, const CellMask& gt, const CellMask& los);

}  // namespace lcdog
