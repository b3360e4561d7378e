#include "lcdog/report.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "lcdog/policies.hpp"

namespace lcdog {

using json = nlohmann::json;

namespace {

double num_or_nan(const json& j) { return j.is_number() ? j.get<double>() : std::nan(""); }

double variance(std::span<const double> xs, double mean) {
  double s = 0.0;
  for (double x : xs) s += (x - mean) * (x - mean);
  return xs.size() > 1 ? s / static_cast<double>(xs.size() - 1) : 0.0;
}

std::string fmt(double v, int prec = 4) {
  if (!std::isfinite(v)) return "n/a";
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << v;
  return os.str();
}

std::string fmt_ci(const MeanCi& c) { return fmt(c.mean) + " ± " + fmt(c.half_width); }

}  // namespace

RunSummary summarize(const RunConfig& cfg, const RunResult& result) {
  RunSummary s;
  s.policy = policy_name(cfg.policy);
  s.mode = std::string(mode_name(cfg.mode));
  s.seed = cfg.seed;
  const EvalReport m = result.mean_eval();
  s.has_eval = result.num_evals() > 0;
  s.accuracy = m.accuracy;
  s.precision = m.precision;
  s.recall = m.recall;
  s.f1 = m.f1;
  s.iou = m.iou;
  s.q = result.bandit.q;
  s.mean_q = result.mean_q();
  s.counts = result.bandit.counts;
  s.truncation_rate = result.truncation_rate();
  return s;
}

RunSummary load_run_summary(const std::filesystem::path& run_dir) {
  std::ifstream in(run_dir / "run.json");
  if (!in) throw std::runtime_error("cannot read " + (run_dir / "run.json").string());
  const json root = json::parse(in);
  const json& j = root.at("summary");
  RunSummary s;
  s.policy = j.at("policy").get<std::string>();
  s.mode = j.at("mode").get<std::string>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.has_eval = j.at("evals").get<long long>() > 0;
  s.accuracy = num_or_nan(j.at("accuracy"));
  s.precision = num_or_nan(j.at("precision"));
  s.recall = num_or_nan(j.at("recall"));
  s.f1 = num_or_nan(j.at("f1"));
  s.iou = num_or_nan(j.at("iou"));
  s.q = j.at("q").get<std::array<double, 4>>();
  s.mean_q = j.at("mean_q").get<std::array<double, 4>>();
  s.counts = j.at("counts").get<std::array<long long, 4>>();
  s.truncation_rate = j.at("truncation_rate").get<double>();
  return s;
}

MeanCi mean_ci(std::span<const double> xs, double confidence) {
  MeanCi c;
  c.n = xs.size();
  if (xs.empty()) return c;
  c.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() < 2) return c;
  const double sd = std::sqrt(variance(xs, c.mean));
  const boost::math::students_t dist(static_cast<double>(xs.size() - 1));
  const double t = boost::math::quantile(dist, 0.5 + confidence / 2.0);
  c.half_width = t * sd / std::sqrt(static_cast<double>(xs.size()));
  return c;
}

double welch_less_p(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) return 1.0;
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(b.size());
  const double va = variance(a, ma) / static_cast<double>(a.size());
  const double vb = variance(b, mb) / static_cast<double>(b.size());
  const double se = std::sqrt(va + vb);
  if (se == 0.0) return ma < mb ? 0.0 : 1.0;
  const double df = (va + vb) * (va + vb) /
                    (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
  const boost::math::students_t dist(df);
  return boost::math::cdf(dist, (ma - mb) / se);
}

std::string format_tables(std::span<const RunSummary> runs) {
  std::map<std::string, std::vector<const RunSummary*>> groups;
  for (const RunSummary& r : runs) {
    groups[r.mode == "sync" ? r.policy : r.policy + " (" + r.mode + ")"].push_back(&r);
  }
  std::ostringstream os;
  os << "| policy | runs | accuracy | precision | recall | F1 | IoU |\n";
  os << "|---|---|---|---|---|---|---|\n";
  for (const auto& [name, rs] : groups) {
    auto column = [&](double RunSummary::*field) {
      std::vector<double> xs;
      for (const RunSummary* r : rs) {
        if (r->has_eval) xs.push_back(r->*field);
      }
      return mean_ci(xs);
    };
    os << "| " << name << " | " << rs.size() << " | " << fmt_ci(column(&RunSummary::accuracy)) << " | "
       << fmt_ci(column(&RunSummary::precision)) << " | " << fmt_ci(column(&RunSummary::recall)) << " | "
       << fmt_ci(column(&RunSummary::f1)) << " | " << fmt_ci(column(&RunSummary::iou)) << " |\n";
  }

  bool header = false;
  for (const auto& [name, rs] : groups) {
    if (rs.front()->policy != "mab") continue;
    if (!header) {
      os << "\n| runs | arm | selected % | mean Q |\n|---|---|---|---|\n";
      header = true;
    }
    std::array<double, 4> total{};
    std::array<double, 4> q{};
    for (const RunSummary* r : rs) {
      for (std::size_t a = 0; a < 4; ++a) {
        total[a] += static_cast<double>(r->counts[a]);
        q[a] += r->mean_q[a] / static_cast<double>(rs.size());
      }
    }
    const double all = std::accumulate(total.begin(), total.end(), 0.0);
    for (std::size_t a = 0; a < 4; ++a) {
      os << "| " << name << " | " << strategy_name(static_cast<StrategyId>(a)) << " | "
         << fmt(all > 0 ? 100.0 * total[a] / all : 0.0, 1) << " | " << fmt(q[a]) << " |\n";
    }
  }
  return os.str();
}

}  // namespace lcdog
