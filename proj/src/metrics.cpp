#include "lcdog/metrics.hpp"

namespace lcdog {

namespace {
double ratio(long long num, long long den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace

CellMask binarize(const DynamicOccupancyGrid& grid, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("binarize: tau must be in (0,1)");
  CellMask out(grid.num_cells());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = grid.occ(i) >= tau;
  return out;
}

EvalReport eval_forecast(const CellMask& pred, const CellMask& gt, const CellMask& los) {
  if (pred.size() != gt.size() || pred.size() != los.size()) {
    throw std::invalid_argument("eval_forecast: mask sizes differ");
  }
  EvalReport r;
  for (std::size_t i = 0; i < los.size(); ++i) {
    if (!los[i]) continue;
    const bool p = pred[i] != 0;
    const bool g = gt[i] != 0;
    r.tp += p && g;
    r.fp += p && !g;
    r.fn += !p && g;
    r.tn += !p && !g;
  }
  r.n_los = r.tp + r.fp + r.fn + r.tn;
  if (r.n_los == 0) throw EmptyEvaluation();
  r.accuracy = ratio(r.tp + r.tn, r.n_los);
  if (r.tp + r.fp + r.fn == 0) {
    r.precision = r.recall = r.f1 = r.iou = 1.0;
    return r;
  }
  r.precision = ratio(r.tp, r.tp + r.fp);
  r.recall = ratio(r.tp, r.tp + r.fn);
  r.f1 = ratio(2 * r.tp, 2 * r.tp + r.fp + r.fn);
  r.iou = ratio(r.tp, r.tp + r.fp + r.fn);
  return r;
}

}  // namespace lcdog
