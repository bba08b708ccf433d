#include "llql/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "llql/errors.hpp"

namespace llql {

namespace {

struct Stats {
  double mean = 0.0;
  double std = 0.0;
};

Stats stats(const std::vector<double>& v) {
  if (v.empty()) return {};
  Stats s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  for (double x : v) s.std += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(s.std / static_cast<double>(v.size()));
  return s;
}

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

EvalAggregate aggregate(const std::string& method, const std::vector<EvalRow>& rows) {
  EvalAggregate a;
  a.method = method;
  std::vector<double> steps, ev, sout, reward;
  for (const auto& r : rows) {
    if (r.method != method) continue;
    ++a.runs;
    if (r.success) ++a.successes;
    steps.push_back(r.steps);
    sout.push_back(r.s_out);
    reward.push_back(r.reward);
    if (r.e_v) ev.push_back(*r.e_v);
  }
  const Stats st = stats(steps), so = stats(sout), rw = stats(reward);
  a.mean_steps = st.mean;
  a.std_steps = st.std;
  a.mean_s_out = so.mean;
  a.std_s_out = so.std;
  a.mean_reward = rw.mean;
  a.std_reward = rw.std;
  if (!ev.empty()) {
    const Stats e = stats(ev);
    a.mean_e_v = e.mean;
    a.std_e_v = e.std;
  }
  return a;
}

std::vector<EvalAggregate> EvalReport::aggregates() const {
  std::vector<std::string> methods;
  for (const auto& r : rows) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
  }
  std::vector<EvalAggregate> out;
  for (const auto& m : methods) out.push_back(aggregate(m, rows));
  return out;
}

std::string rows_to_csv(const std::vector<EvalRow>& rows) {
  std::ostringstream os;
  os << "method,seed,run,steps,success,e_v,s_out,reward\n";
  for (const auto& r : rows) {
    os << r.method << ',' << r.seed << ',' << r.run << ',' << r.steps << ',' << (r.success ? 1 : 0) << ','
       << opt(r.e_v) << ',' << r.s_out << ',' << format_double(r.reward) << '\n';
  }
  return os.str();
}

std::string aggregates_to_csv(const std::vector<EvalAggregate>& aggs) {
  std::ostringstream os;
  os << "method,runs,successes,mean_steps,std_steps,mean_e_v,std_e_v,mean_s_out,std_s_out,mean_reward,std_reward\n";
  for (const auto& a : aggs) {
    os << a.method << ',' << a.runs << ',' << a.successes << ',' << format_double(a.mean_steps) << ','
       << format_double(a.std_steps) << ',' << opt(a.mean_e_v) << ',' << opt(a.std_e_v) << ','
       << format_double(a.mean_s_out) << ',' << format_double(a.std_s_out) << ',' << format_double(a.mean_reward)
       << ',' << format_double(a.std_reward) << '\n';
  }
  return os.str();
}

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"method", r.method},
                    {"seed", r.seed},
                    {"run", r.run},
                    {"steps", r.steps},
                    {"success", r.success},
                    {"e_v", opt_json(r.e_v)},
                    {"s_out", r.s_out},
                    {"reward", r.reward}});
  }
  nlohmann::json aggs = nlohmann::json::array();
  for (const auto& a : report.aggregates()) {
    aggs.push_back({{"method", a.method},
                    {"runs", a.runs},
                    {"successes", a.successes},
                    {"mean_steps", a.mean_steps},
                    {"std_steps", a.std_steps},
                    {"mean_e_v", opt_json(a.mean_e_v)},
                    {"std_e_v", opt_json(a.std_e_v)},
                    {"mean_s_out", a.mean_s_out},
                    {"std_s_out", a.std_s_out},
                    {"mean_reward", a.mean_reward},
                    {"std_reward", a.std_reward}});
  }
  return {{"name", report.name}, {"metadata", report.metadata}, {"rows", rows}, {"aggregates", aggs}};
}

EvalReport report_from_json(const nlohmann::json& doc) {
  EvalReport r;
  r.name = doc.at("name").get<std::string>();
  r.metadata = doc.value("metadata", nlohmann::json::object());
  for (const auto& j : doc.at("rows")) {
    EvalRow row;
    row.method = j.at("method").get<std::string>();
    row.seed = j.at("seed").get<std::uint64_t>();
    row.run = j.at("run").get<int>();
    row.steps = j.at("steps").get<int>();
    row.success = j.at("success").get<bool>();
    if (!j.at("e_v").is_null()) row.e_v = j.at("e_v").get<double>();
    row.s_out = j.at("s_out").get<int>();
    row.reward = j.at("reward").get<double>();
    r.rows.push_back(std::move(row));
  }
  return r;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write '" + path.string() + "'");
  os << text;
  if (!os) throw IoError("failed writing '" + path.string() + "'");
}

void write_report(const EvalReport& report, const std::filesystem::path& dir) {
  write_text(dir / "report.csv", rows_to_csv(report.rows));
  write_text(dir / "summary.csv", aggregates_to_csv(report.aggregates()));
  // nlohmann's number output is the shortest round-trip form, hence stable.
  write_text(dir / "report.json", report_to_json(report).dump(2) + "\n");
}

std::vector<std::size_t> top_k_logs(const std::vector<TrainLog>& logs, std::size_t k) {
  std::vector<std::size_t> idx(logs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const double ra = logs[a].final_reward(), rb = logs[b].final_reward();
    if (ra != rb) return ra > rb;
    return logs[a].seed < logs[b].seed;
  });
  idx.resize(std::min(k, idx.size()));
  return idx;
}

std::string curves_to_csv(const std::vector<TrainLog>& logs, std::size_t k) {
  std::vector<std::string> methods;
  for (const auto& l : logs) {
    if (std::find(methods.begin(), methods.end(), l.method) == methods.end()) methods.push_back(l.method);
  }
  std::ostringstream os;
  os << "episode,mean_reward,std_reward,method\n";
  for (const auto& m : methods) {
    std::vector<TrainLog> group;
    for (const auto& l : logs) {
      if (l.method == m) group.push_back(l);
    }
    const auto top = top_k_logs(group, k);
    std::size_t len = std::numeric_limits<std::size_t>::max();
    for (auto i : top) len = std::min(len, group[i].episodes.size());
    if (top.empty()) len = 0;
    for (std::size_t e = 0; e < len; ++e) {
      std::vector<double> v;
      for (auto i : top) v.push_back(group[i].episodes[e].cumulative_reward);
      const Stats s = stats(v);
      os << group[top.front()].episodes[e].episode << ',' << format_double(s.mean) << ',' << format_double(s.std)
         << ',' << m << '\n';
    }
  }
  return os.str();
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "value,runs,successes,mean_steps,std_steps\n";
  for (const auto& r : rows) {
    os << format_double(r.value) << ',' << r.runs << ',' << r.successes << ',' << format_double(r.mean_steps) << ','
       << format_double(r.std_steps) << '\n';
  }
  return os.str();
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DimensionMismatch("spearman inputs differ in length");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t t = i; t <= j; ++t) r[idx[t]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const Stats sa = stats(ra), sb = stats(rb);
  if (sa.std == 0.0 || sb.std == 0.0) return 0.0;
  double cov = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) cov += (ra[i] - sa.mean) * (rb[i] - sb.mean);
  cov /= static_cast<double>(ra.size());
  return cov / (sa.std * sb.std);
}

}  // namespace llql
