#include "mjls/problem_io.h"

#include <fstream>
#include <set>
#include <sstream>

namespace mjls {

namespace {

using nlohmann::json;

std::string Join(const std::string& path, const std::string& key) {
  return path + "/" + key;
}
std::string Join(const std::string& path, std::size_t index) {
  return path + "/" + std::to_string(index);
}

void RejectUnknown(const json& object, const std::string& path,
                   const std::set<std::string>& allowed) {
  for (const auto& [key, value] : object.items()) {
    if (!allowed.count(key)) {
      throw ValidationError(Join(path, key), "unknown field");
    }
  }
}

const json& Require(const json& object, const std::string& path,
                    const std::string& key) {
  auto it = object.find(key);
  if (it == object.end()) {
    throw ValidationError(Join(path, key), "missing required field");
  }
  return *it;
}

double ReadNumber(const json& value, const std::string& path) {
  if (!value.is_number()) throw ValidationError(path, "expected a number");
  return value.get<double>();
}

int ReadPositiveInt(const json& value, const std::string& path) {
  if (!value.is_number_integer() || value.get<std::int64_t>() < 1 ||
      value.get<std::int64_t>() > std::numeric_limits<int>::max()) {
    throw ValidationError(path, "expected a positive integer");
  }
  return value.get<int>();
}

Vector ReadVector(const json& value, const std::string& path, int expected) {
  if (!value.is_array()) throw ValidationError(path, "expected an array");
  if (static_cast<int>(value.size()) != expected) {
    throw ValidationError(path, "expected " + std::to_string(expected) +
                                    " entries, got " +
                                    std::to_string(value.size()));
  }
  Vector v(expected);
  for (int i = 0; i < expected; ++i) v(i) = ReadNumber(value[i], Join(path, i));
  return v;
}

Matrix ReadMatrix(const json& value, const std::string& path, int rows,
                  int cols) {
  if (!value.is_array() || static_cast<int>(value.size()) != rows) {
    throw ValidationError(path, "expected " + std::to_string(rows) +
                                    " rows of " + std::to_string(cols));
  }
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const json& row = value[r];
    const std::string row_path = Join(path, r);
    if (!row.is_array() || static_cast<int>(row.size()) != cols) {
      throw ValidationError(row_path,
                            "expected " + std::to_string(cols) + " columns");
    }
    for (int c = 0; c < cols; ++c) {
      m(r, c) = ReadNumber(row[c], Join(row_path, c));
    }
  }
  return m;
}

MatrixSchedule ReadSchedule(const json& value, const std::string& path,
                            int rows, int cols, double horizon) {
  if (value.is_object()) {
    RejectUnknown(value, path, {"schedule"});
    const json& samples = Require(value, path, "schedule");
    const std::string samples_path = Join(path, "schedule");
    if (!samples.is_array() || samples.size() < 2) {
      throw ValidationError(samples_path, "expected at least two samples");
    }
    std::vector<Matrix> parsed;
    for (std::size_t k = 0; k < samples.size(); ++k) {
      parsed.push_back(
          ReadMatrix(samples[k], Join(samples_path, k), rows, cols));
    }
    return MatrixSchedule(std::move(parsed), horizon);
  }
  return MatrixSchedule(ReadMatrix(value, path, rows, cols));
}

std::vector<MatrixSchedule> ReadPerMode(const json& doc, const char* key,
                                        int modes, int rows, int cols,
                                        double horizon) {
  const std::string path = std::string("/") + key;
  const json& value = Require(doc, "", key);
  if (!value.is_array() || static_cast<int>(value.size()) != modes) {
    throw ValidationError(path, "expected one matrix per mode (" +
                                    std::to_string(modes) + ")");
  }
  std::vector<MatrixSchedule> out;
  for (int i = 0; i < modes; ++i) {
    out.push_back(ReadSchedule(value[i], Join(path, i), rows, cols, horizon));
  }
  return out;
}

json ScheduleToJson(const MatrixSchedule& s) {
  if (s.is_constant()) return MatrixToJson(s.samples().front());
  json samples = json::array();
  for (const Matrix& m : s.samples()) samples.push_back(MatrixToJson(m));
  return json{{"schedule", samples}};
}

}  // namespace

json MatrixToJson(const Matrix& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

ProblemFile ParseProblemFile(const json& doc) {
  if (!doc.is_object()) throw ValidationError("", "document must be an object");
  RejectUnknown(doc, "",
                {"description", "dimensions", "A", "B", "Q", "R", "Q_terminal",
                 "generator", "phi", "horizon", "initial_state", "solver",
                 "monte_carlo"});
  ProblemFile file;
  if (auto it = doc.find("description"); it != doc.end()) {
    if (!it->is_string()) {
      throw ValidationError("/description", "expected a string");
    }
    file.description = it->get<std::string>();
  }

  const json& dims = Require(doc, "", "dimensions");
  if (!dims.is_object()) {
    throw ValidationError("/dimensions", "expected an object");
  }
  RejectUnknown(dims, "/dimensions", {"modes", "states", "inputs"});
  const int modes =
      ReadPositiveInt(Require(dims, "/dimensions", "modes"), "/dimensions/modes");
  const int n = ReadPositiveInt(Require(dims, "/dimensions", "states"),
                                "/dimensions/states");
  const int m = ReadPositiveInt(Require(dims, "/dimensions", "inputs"),
                                "/dimensions/inputs");

  ProblemInstance& p = file.problem;
  p.horizon = ReadNumber(Require(doc, "", "horizon"), "/horizon");
  if (!(p.horizon > 0.0) || !std::isfinite(p.horizon)) {
    throw ValidationError("/horizon", "horizon must be positive and finite");
  }
  p.dynamics = ReadPerMode(doc, "A", modes, n, n, p.horizon);
  p.input = ReadPerMode(doc, "B", modes, n, m, p.horizon);
  p.state_weight = ReadPerMode(doc, "Q", modes, n, n, p.horizon);
  p.input_weight = ReadPerMode(doc, "R", modes, m, m, p.horizon);

  const json& terminal = Require(doc, "", "Q_terminal");
  if (!terminal.is_array() || static_cast<int>(terminal.size()) != modes) {
    throw ValidationError("/Q_terminal", "expected one matrix per mode");
  }
  for (int i = 0; i < modes; ++i) {
    p.terminal_weight.push_back(
        ReadMatrix(terminal[i], Join("/Q_terminal", i), n, n));
  }

  p.generator =
      ReadMatrix(Require(doc, "", "generator"), "/generator", modes, modes);
  p.phi = ReadVector(Require(doc, "", "phi"), "/phi", modes);

  const json& init = Require(doc, "", "initial_state");
  if (!init.is_object()) {
    throw ValidationError("/initial_state", "expected an object");
  }
  if (init.contains("x0")) {
    RejectUnknown(init, "/initial_state", {"x0"});
    p.initial_state.mean = ReadVector(init["x0"], "/initial_state/x0", n);
  } else {
    RejectUnknown(init, "/initial_state", {"mean", "covariances"});
    p.initial_state.mean = ReadVector(Require(init, "/initial_state", "mean"),
                                      "/initial_state/mean", n);
    const json& covs = Require(init, "/initial_state", "covariances");
    const std::string path = "/initial_state/covariances";
    if (!covs.is_array() || static_cast<int>(covs.size()) != modes) {
      throw ValidationError(path, "expected one entry per mode");
    }
    for (int i = 0; i < modes; ++i) {
      if (covs[i].is_null()) {
        p.initial_state.covariances.emplace_back();
      } else {
        p.initial_state.covariances.emplace_back(
            ReadMatrix(covs[i], Join(path, i), n, n));
      }
    }
  }

  if (auto it = doc.find("solver"); it != doc.end()) {
    if (!it->is_object()) throw ValidationError("/solver", "expected an object");
    RejectUnknown(*it, "/solver", {"method", "num_steps"});
    if (auto method = it->find("method"); method != it->end()) {
      if (!method->is_string()) {
        throw ValidationError("/solver/method", "expected a string");
      }
      file.method = ParseMethod(method->get<std::string>());
    }
    if (auto steps = it->find("num_steps"); steps != it->end()) {
      file.num_steps = ReadPositiveInt(*steps, "/solver/num_steps");
    }
  }
  if (auto it = doc.find("monte_carlo"); it != doc.end()) {
    if (!it->is_object()) {
      throw ValidationError("/monte_carlo", "expected an object");
    }
    RejectUnknown(*it, "/monte_carlo", {"num_paths", "master_seed"});
    if (auto paths = it->find("num_paths"); paths != it->end()) {
      file.num_paths = ReadPositiveInt(*paths, "/monte_carlo/num_paths");
      if (*file.num_paths < 2) {
        throw ValidationError("/monte_carlo/num_paths",
                              "need at least two paths");
      }
    }
    if (auto seed = it->find("master_seed"); seed != it->end()) {
      const bool nonnegative =
          seed->is_number_unsigned() ||
          (seed->is_number_integer() && seed->get<std::int64_t>() >= 0);
      if (!nonnegative) {
        throw ValidationError("/monte_carlo/master_seed",
                              "expected a nonnegative integer");
      }
      file.master_seed = seed->get<std::uint64_t>();
    }
  }

  p.Validate();
  return file;
}

ProblemFile LoadProblemFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("", "cannot open " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ValidationError("", path.string() + ": " + e.what());
  }
  return ParseProblemFile(doc);
}

json SerializeProblemFile(const ProblemFile& file) {
  const ProblemInstance& p = file.problem;
  json doc;
  if (!file.description.empty()) doc["description"] = file.description;
  doc["dimensions"] = {{"modes", p.num_modes()},
                       {"states", p.state_dim()},
                       {"inputs", p.input_dim()}};
  auto per_mode = [](const std::vector<MatrixSchedule>& schedules) {
    json out = json::array();
    for (const auto& s : schedules) out.push_back(ScheduleToJson(s));
    return out;
  };
  doc["A"] = per_mode(p.dynamics);
  doc["B"] = per_mode(p.input);
  doc["Q"] = per_mode(p.state_weight);
  doc["R"] = per_mode(p.input_weight);
  json terminal = json::array();
  for (const Matrix& q : p.terminal_weight) terminal.push_back(MatrixToJson(q));
  doc["Q_terminal"] = terminal;
  doc["generator"] = MatrixToJson(p.generator);
  doc["phi"] = std::vector<double>(p.phi.data(), p.phi.data() + p.phi.size());
  doc["horizon"] = p.horizon;
  const auto& mean = p.initial_state.mean;
  const std::vector<double> mean_values(mean.data(), mean.data() + mean.size());
  if (p.initial_state.is_deterministic()) {
    doc["initial_state"] = {{"x0", mean_values}};
  } else {
    json covs = json::array();
    for (const auto& cov : p.initial_state.covariances) {
      covs.push_back(cov ? MatrixToJson(*cov) : json(nullptr));
    }
    doc["initial_state"] = {{"mean", mean_values}, {"covariances", covs}};
  }
  if (file.method || file.num_steps) {
    json solver = json::object();
    if (file.method) solver["method"] = std::string(MethodName(*file.method));
    if (file.num_steps) solver["num_steps"] = *file.num_steps;
    doc["solver"] = solver;
  }
  if (file.num_paths || file.master_seed) {
    json mc = json::object();
    if (file.num_paths) mc["num_paths"] = *file.num_paths;
    if (file.master_seed) mc["master_seed"] = *file.master_seed;
    doc["monte_carlo"] = mc;
  }
  return doc;
}

}  // namespace mjls
