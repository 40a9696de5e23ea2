#include "mjls/report.h"

#include <iomanip>
#include <sstream>

namespace mjls {

namespace {

using nlohmann::ordered_json;

ordered_json ToJson(const Matrix& m) {
  ordered_json rows = ordered_json::array();
  for (int r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

ordered_json OneBased(const std::vector<int>& modes) {
  ordered_json out = ordered_json::array();
  for (int i : modes) out.push_back(i + 1);
  return out;
}

ordered_json PerMode(const std::vector<ModeMatrix>& entries) {
  ordered_json out = ordered_json::object();
  for (const auto& e : entries) out[std::to_string(e.mode + 1)] = ToJson(e.value);
  return out;
}

template <typename T>
ordered_json OrNull(const std::optional<T>& value) {
  return value ? ordered_json(*value) : ordered_json(nullptr);
}

std::string ModeList(const std::vector<int>& modes) {
  std::ostringstream out;
  out << "{";
  for (std::size_t k = 0; k < modes.size(); ++k) {
    out << (k ? ", " : "") << modes[k] + 1;
  }
  out << "}";
  return out.str();
}

void PrintMatrix(std::ostream& out, const Matrix& m, const std::string& indent) {
  for (int r = 0; r < m.rows(); ++r) {
    out << indent << "[";
    for (int c = 0; c < m.cols(); ++c) {
      out << (c ? " " : "") << std::setw(12) << m(r, c);
    }
    out << " ]\n";
  }
}

}  // namespace

ordered_json ReportToJson(const Report& report) {
  ordered_json doc;
  doc["schema_version"] = kReportSchemaVersion;
  doc["command"] = report.command;
  doc["description"] = report.description;
  doc["method"] = report.method;
  doc["num_steps"] = report.num_steps;
  doc["horizon"] = report.horizon;
  doc["visited"] = OneBased(report.visited.members());
  doc["absorbing"] = OneBased(report.absorbing);
  doc["Y0"] = PerMode(report.cost_to_go0);
  doc["gains0"] = PerMode(report.gains0);
  doc["cost_analytic"] = report.cost_analytic;
  doc["cost_moment"] = OrNull(report.cost_moment);
  if (report.cost_mc) {
    doc["cost_mc"] = report.cost_mc->mean;
    doc["mc_std_error"] = report.cost_mc->std_error;
    doc["mc_ci95"] = {report.cost_mc->ci_low, report.cost_mc->ci_high};
    doc["mc_num_paths"] = report.cost_mc->num_paths;
  } else {
    doc["cost_mc"] = nullptr;
    doc["mc_std_error"] = nullptr;
    doc["mc_ci95"] = nullptr;
    doc["mc_num_paths"] = nullptr;
  }
  doc["mc_seed"] = OrNull(report.mc_seed);
  doc["rho"] = OrNull(report.rho);
  doc["delta"] = OrNull(report.delta);
  ordered_json probs = ordered_json::array();
  for (std::size_t k = 0; k < report.checkpoints.size(); ++k) {
    const Vector& p = report.mode_probs[k];
    probs.push_back({{"t", report.checkpoints[k]},
                     {"p", std::vector<double>(p.data(), p.data() + p.size())}});
  }
  doc["mode_probs"] = probs;
  doc["warnings"] = report.warnings;
  if (report.timing_ms) {
    ordered_json timing = ordered_json::object();
    for (const auto& [stage, ms] : *report.timing_ms) timing[stage] = ms;
    doc["timing_ms"] = timing;
  } else {
    doc["timing_ms"] = nullptr;
  }
  return doc;
}

std::string ReportToCsv(const Report& report) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "quantity,mode,time,row,col,value\n";
  auto scalar = [&](const char* name, double value) {
    out << name << ",,,,," << value << "\n";
  };
  auto matrices = [&](const char* name, const std::vector<ModeMatrix>& entries) {
    for (const auto& e : entries) {
      for (int r = 0; r < e.value.rows(); ++r) {
        for (int c = 0; c < e.value.cols(); ++c) {
          out << name << "," << e.mode + 1 << ",0," << r + 1 << "," << c + 1
              << "," << e.value(r, c) << "\n";
        }
      }
    }
  };
  for (int i : report.visited.members()) {
    out << "visited," << i + 1 << ",,,,1\n";
  }
  matrices("Y0", report.cost_to_go0);
  matrices("gains0", report.gains0);
  scalar("cost_analytic", report.cost_analytic);
  if (report.cost_moment) scalar("cost_moment", *report.cost_moment);
  if (report.cost_mc) {
    scalar("cost_mc", report.cost_mc->mean);
    scalar("mc_std_error", report.cost_mc->std_error);
  }
  if (report.rho) scalar("rho", *report.rho);
  if (report.delta) scalar("delta", *report.delta);
  for (std::size_t k = 0; k < report.checkpoints.size(); ++k) {
    for (int i = 0; i < report.mode_probs[k].size(); ++i) {
      out << "mode_prob," << i + 1 << "," << report.checkpoints[k] << ",,,"
          << report.mode_probs[k](i) << "\n";
    }
  }
  if (report.timing_ms) {
    for (const auto& [stage, ms] : *report.timing_ms) {
      out << "timing_ms_" << stage << ",,,,," << ms << "\n";
    }
  }
  return out.str();
}

std::string ReportToText(const Report& report) {
  std::ostringstream out;
  out << std::setprecision(6);
  if (!report.description.empty()) out << report.description << "\n";
  out << "horizon T = " << report.horizon << ", " << report.num_steps
      << " steps, method " << report.method << "\n";
  out << "visited modes Z = " << ModeList(report.visited.members());
  if (!report.absorbing.empty()) {
    out << ", absorbing " << ModeList(report.absorbing);
  }
  out << "\n\n";
  for (std::size_t k = 0; k < report.cost_to_go0.size(); ++k) {
    const int mode = report.cost_to_go0[k].mode + 1;
    out << "Y_" << mode << "(0) =\n";
    PrintMatrix(out, report.cost_to_go0[k].value, "  ");
    out << "L_" << mode << "(0) =\n";
    PrintMatrix(out, report.gains0[k].value, "  ");
  }
  out << "\nJ* (Riccati)      " << std::setw(14) << report.cost_analytic << "\n";
  if (report.cost_moment) {
    out << "J  (moments)      " << std::setw(14) << *report.cost_moment << "\n";
  }
  if (report.cost_mc) {
    out << "J  (Monte Carlo)  " << std::setw(14) << report.cost_mc->mean
        << "  +/- " << report.cost_mc->std_error << " (s.e., "
        << report.cost_mc->num_paths << " paths, 95% CI ["
        << report.cost_mc->ci_low << ", " << report.cost_mc->ci_high << "])\n";
  }
  if (report.rho) {
    out << "rho = MC / analytic = " << *report.rho << ", delta = "
        << *report.delta << "\n";
  }
  out << "\nmode probabilities\n";
  for (std::size_t k = 0; k < report.checkpoints.size(); ++k) {
    out << "  t = " << std::setw(8) << report.checkpoints[k] << ":";
    for (int i = 0; i < report.mode_probs[k].size(); ++i) {
      out << "  p_" << i + 1 << " = " << std::fixed << std::setprecision(4)
          << report.mode_probs[k](i) << std::defaultfloat
          << std::setprecision(6);
    }
    out << "\n";
  }
  for (const auto& w : report.warnings) out << "warning: " << w << "\n";
  if (report.timing_ms) {
    out << "\ntiming (ms):";
    for (const auto& [stage, ms] : *report.timing_ms) {
      out << " " << stage << "=" << ms;
    }
    out << "\n";
  }
  return out.str();
}

std::string VisitedToText(const VisitedListing& listing) {
  std::ostringstream out;
  out << "visited:     " << ModeList(listing.visited.members()) << "\n";
  out << "not visited: " << ModeList(listing.not_visited) << "\n";
  out << "absorbing:   " << ModeList(listing.absorbing) << "\n";
  return out.str();
}

std::string ReproductionToText(const ReproductionTable& table) {
  std::ostringstream out;
  out << table.title << "\n";
  out << std::left << std::setw(34) << "quantity" << std::right
      << std::setw(14) << "computed" << std::setw(12) << "expected"
      << std::setw(12) << "tolerance" << "  result\n";
  int passed = 0;
  int checked = 0;
  for (const auto& row : table.rows) {
    out << std::left << std::setw(34) << row.label << std::right << std::fixed
        << std::setprecision(4) << std::setw(14) << row.computed;
    if (row.expected) {
      out << std::setw(12) << *row.expected;
    } else {
      out << std::setw(12) << "-";
    }
    std::ostringstream tol;
    if (row.informational) {
      tol << "-";
    } else if (row.relative) {
      tol << std::setprecision(1) << std::fixed << row.tolerance * 100 << "%";
    } else {
      tol << std::setprecision(3) << std::fixed << row.tolerance;
    }
    out << std::setw(12) << tol.str() << "  ";
    if (row.informational) {
      out << "info";
    } else {
      ++checked;
      if (row.pass) ++passed;
      out << (row.pass ? "PASS" : "FAIL");
    }
    if (!row.note.empty()) out << "  (" << row.note << ")";
    out << std::defaultfloat << "\n";
  }
  out << passed << "/" << checked << " checks passed\n";
  return out.str();
}

}  // namespace mjls
