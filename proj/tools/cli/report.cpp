#include "report.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mergelens/error.hpp"

namespace mergelens::cli {

std::string fmt(double v) {
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  if (std::isnan(v)) return "nan";
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::string tau_label(double tau) { return fmt(tau); }

namespace {

std::string freq(std::optional<double> f) { return f ? fmt(*f) : ""; }

void conflict_rows(std::ostringstream& os, const ConflictSummary& c, const char* phenomenon) {
  os << fmt(c.tau) << ',' << phenomenon << ",conflict," << fmt(c.conflict_halfwidth) << ',' << c.conflict_count
     << ',' << c.conflict_successes << ',' << freq(c.conflict_freq()) << '\n';
  os << fmt(c.tau) << ',' << phenomenon << ",nonconflict," << fmt(c.conflict_halfwidth) << ','
     << c.nonconflict_count << ',' << c.nonconflict_successes << ',' << freq(c.nonconflict_freq()) << '\n';
}

}  // namespace

std::string binned_csv(const BinnedStatistic& stat) {
  std::ostringstream os;
  os << "tau,bin,lower,upper,count,successes,frequency\n";
  for (std::size_t b = 0; b < stat.counts.size(); ++b) {
    os << fmt(stat.tau) << ',' << b << ',' << fmt(stat.edges.lower(b)) << ',' << fmt(stat.edges.upper(b)) << ','
       << stat.counts[b] << ',' << stat.successes[b] << ',' << freq(stat.frequency(b)) << '\n';
  }
  return os.str();
}

std::string conflict_csv(const std::vector<TauResult>& taus) {
  std::ostringstream os;
  os << "tau,phenomenon,zone,halfwidth,count,successes,frequency\n";
  for (const auto& t : taus) {
    conflict_rows(os, t.pass_first_conflict, "pass_first");
    conflict_rows(os, t.lane_change_conflict, "lane_change");
  }
  return os.str();
}

std::string exclusions_csv(const std::vector<TauResult>& taus) {
  std::ostringstream os;
  os << "tau,phenomenon,reason,count\n";
  for (const auto& t : taus) {
    for (const auto& [reason, n] : t.pass_first.excluded) os << fmt(t.tau) << ",pass_first," << reason << ',' << n << '\n';
    for (const auto& [reason, n] : t.lane_changes.excluded) os << fmt(t.tau) << ",lane_change," << reason << ',' << n << '\n';
  }
  return os.str();
}

std::string events_csv(const std::vector<EventRecord>& events, const std::vector<std::string>& sources) {
  std::ostringstream os;
  os << "source,merger_id,t_m,merge_y,highway_id,pairing_score,pairing_excluded";
  std::vector<double> taus;
  if (!events.empty()) {
    for (const auto& o : events.front().per_tau) taus.push_back(o.tau);
  }
  for (double tau : taus) {
    const auto l = tau_label(tau);
    os << ",lead_time_" << l << ",pass_first_" << l << ",lane_changes_" << l;
  }
  os << '\n';
  for (const auto& r : events) {
    const auto& e = r.event;
    os << (r.dataset < sources.size() ? sources[r.dataset] : std::to_string(r.dataset)) << ','
       << to_int(e.merger_id) << ',' << fmt(e.t_m) << ',' << fmt(e.merge_y) << ','
       << (e.highway_id ? std::to_string(to_int(*e.highway_id)) : "") << ','
       << (e.highway_id ? fmt(e.pairing_score) : "") << ',' << r.pairing_excluded;
    for (const auto& o : r.per_tau) {
      os << ',';
      if (o.lead && o.lead->valid) {
        os << fmt(o.lead->lead_time);
      } else if (o.lead) {
        os << to_string(o.lead->invalid_reason.value_or(ErrorCode::kDegenerateSpeed));
      } else {
        os << o.lead_excluded;
      }
      os << ',';
      if (o.pass_first) {
        os << (o.pass_first->exact_tie ? "tie" : o.pass_first->highway_passed_first ? "highway" : "merger");
      } else {
        os << o.pass_first_excluded;
      }
      os << ',';
      if (o.lane_changes) {
        os << o.lane_changes->size();
      } else {
        os << o.lane_changes_excluded;
      }
    }
    os << '\n';
  }
  return os.str();
}

std::string diff_csv(const BinnedStatistic& observed, const BinnedStatistic& predicted) {
  if (!(observed.edges == predicted.edges)) throw Error(ErrorCode::kMisalignedEdges, "arms use different bin edges");
  std::ostringstream os;
  os << "tau,bin,lower,upper,observed_count,predicted_count,observed_frequency,predicted_frequency,difference\n";
  for (std::size_t b = 0; b < observed.counts.size(); ++b) {
    const auto fo = observed.frequency(b);
    const auto fp = predicted.frequency(b);
    os << fmt(observed.tau) << ',' << b << ',' << fmt(observed.edges.lower(b)) << ',' << fmt(observed.edges.upper(b))
       << ',' << observed.counts[b] << ',' << predicted.counts[b] << ',' << freq(fo) << ',' << freq(fp) << ',';
    if (fo && fp) os << fmt(*fo - *fp);
    os << '\n';
  }
  return os.str();
}

std::string diff_conflict_csv(const std::vector<TauResult>& observed, const std::vector<TauResult>& predicted) {
  std::ostringstream os;
  os << "tau,phenomenon,zone,observed_count,predicted_count,observed_frequency,predicted_frequency,difference\n";
  auto row = [&](double tau, const char* ph, const char* zone, std::size_t co, std::size_t cp,
                 std::optional<double> fo, std::optional<double> fp) {
    os << fmt(tau) << ',' << ph << ',' << zone << ',' << co << ',' << cp << ',' << freq(fo) << ',' << freq(fp) << ',';
    if (fo && fp) os << fmt(*fo - *fp);
    os << '\n';
  };
  for (std::size_t k = 0; k < observed.size() && k < predicted.size(); ++k) {
    const double tau = observed[k].tau;
    const auto emit = [&](const ConflictSummary& o, const ConflictSummary& p, const char* ph) {
      row(tau, ph, "conflict", o.conflict_count, p.conflict_count, o.conflict_freq(), p.conflict_freq());
      row(tau, ph, "nonconflict", o.nonconflict_count, p.nonconflict_count, o.nonconflict_freq(),
          p.nonconflict_freq());
    };
    emit(observed[k].pass_first_conflict, predicted[k].pass_first_conflict, "pass_first");
    emit(observed[k].lane_change_conflict, predicted[k].lane_change_conflict, "lane_change");
  }
  return os.str();
}

std::string displacement_csv(const std::vector<DisplacementErrors>& errors, const std::vector<double>& taus,
                             double dt) {
  std::ostringstream os;
  os << "tau,pairs,step,t_ahead,rmse,ade,fde\n";
  for (std::size_t k = 0; k < errors.size() && k < taus.size(); ++k) {
    const auto& e = errors[k];
    for (std::size_t s = 0; s < e.per_step_rmse.size(); ++s) {
      os << fmt(taus[k]) << ',' << e.pairs << ',' << s + 1 << ',' << fmt(static_cast<double>(s + 1) * dt) << ','
         << fmt(e.per_step_rmse[s]) << ',' << fmt(e.ade) << ',' << fmt(e.fde) << '\n';
    }
  }
  return os.str();
}

OutputDir::OutputDir(std::filesystem::path root) : root_(std::move(root)) {
  std::error_code ec;
  std::filesystem::create_directories(root_, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create output directory " + root_.string() + ": " + ec.message());
}

void OutputDir::write(const std::string& name, const std::string& content) {
  const auto path = root_ / name;
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  out.close();
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  written_.push_back(name);
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::uint64_t h = 1469598103934665603ULL;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

}  // namespace mergelens::cli
