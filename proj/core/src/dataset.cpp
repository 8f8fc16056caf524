#include "extctrl/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "extctrl/error.hpp"
#include "extctrl/json_format.hpp"

namespace extctrl {

std::string to_string(Group g) { return g == Group::Trial ? "trial" : "external"; }

std::string to_string(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::Binary: return "binary";
    case OutcomeKind::Continuous: return "continuous";
    case OutcomeKind::TimeToEvent: return "survival";
  }
  return "unknown";
}

OutcomeKind parse_outcome_kind(const std::string& s) {
  if (s == "binary") return OutcomeKind::Binary;
  if (s == "continuous") return OutcomeKind::Continuous;
  if (s == "survival" || s == "time-to-event" || s == "tte") return OutcomeKind::TimeToEvent;
  throw Error(ErrorCode::SchemaViolation, "unknown outcome kind '" + s + "'");
}

// ---------------------------------------------------------------------------
// Dataset

Dataset::Dataset(std::vector<std::string> covariate_names, std::vector<PatientRecord> records,
                 OutcomeKind outcome_kind)
    : covariate_names_(std::move(covariate_names)),
      records_(std::move(records)),
      outcome_kind_(outcome_kind) {
  std::set<std::string> seen;
  for (const auto& name : covariate_names_) {
    if (!seen.insert(name).second)
      throw Error(ErrorCode::DuplicateCovariate, "covariate '" + name + "' listed twice");
  }
  if (records_.empty()) throw Error(ErrorCode::EmptyDataset, "dataset has no records");
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (r.covariates.size() != covariate_names_.size())
      throw Error(ErrorCode::SchemaViolation,
                  "row " + std::to_string(i + 1) + ": covariate vector length mismatch");
    for (double v : r.covariates) {
      if (!std::isfinite(v))
        throw Error(ErrorCode::MissingValue, "row " + std::to_string(i + 1) + ": non-finite covariate");
    }
    if (r.time.has_value() != r.event.has_value())
      throw Error(ErrorCode::InvalidOutcome,
                  "row " + std::to_string(i + 1) + ": time and event must be given together");
    if (r.time && !(*r.time >= 0.0))
      throw Error(ErrorCode::InvalidOutcome, "row " + std::to_string(i + 1) + ": negative time");
    if (outcome_kind_ == OutcomeKind::Binary && r.outcome && *r.outcome != 0.0 && *r.outcome != 1.0)
      throw Error(ErrorCode::InvalidOutcome,
                  "row " + std::to_string(i + 1) + ": binary outcome must be 0 or 1");
    if (r.is_trial()) ++n_trial_;
  }
  if (n_trial_ == 0) throw Error(ErrorCode::EmptyDataset, "dataset has no trial records");
}

std::size_t Dataset::covariate_index(const std::string& name) const {
  auto it = std::find(covariate_names_.begin(), covariate_names_.end(), name);
  if (it == covariate_names_.end())
    throw Error(ErrorCode::UnknownCovariate, "no covariate named '" + name + "'");
  return static_cast<std::size_t>(it - covariate_names_.begin());
}

std::vector<double> Dataset::covariate(const std::string& name) const {
  const std::size_t j = covariate_index(name);
  std::vector<double> out;
  out.reserve(records_.size());
  for (const auto& r : records_) out.push_back(r.covariates[j]);
  return out;
}

Eigen::MatrixXd Dataset::design_matrix(std::span<const std::string> names) const {
  std::vector<std::size_t> cols;
  cols.reserve(names.size());
  for (const auto& n : names) cols.push_back(covariate_index(n));
  Eigen::MatrixXd X(static_cast<Eigen::Index>(records_.size()), static_cast<Eigen::Index>(cols.size() + 1));
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    X(row, 0) = 1.0;
    for (std::size_t k = 0; k < cols.size(); ++k)
      X(row, static_cast<Eigen::Index>(k + 1)) = records_[i].covariates[cols[k]];
  }
  return X;
}

Eigen::VectorXd Dataset::trial_indicator() const {
  Eigen::VectorXd t(static_cast<Eigen::Index>(records_.size()));
  for (std::size_t i = 0; i < records_.size(); ++i)
    t(static_cast<Eigen::Index>(i)) = records_[i].is_trial() ? 1.0 : 0.0;
  return t;
}

Dataset Dataset::subset(Group g) const {
  std::vector<PatientRecord> rows;
  for (const auto& r : records_)
    if (r.group == g) rows.push_back(r);
  return Dataset(covariate_names_, std::move(rows), outcome_kind_);
}

Dataset Dataset::select(std::span<const std::size_t> rows) const {
  std::vector<PatientRecord> out;
  out.reserve(rows.size());
  for (std::size_t i : rows) out.push_back(records_.at(i));
  return Dataset(covariate_names_, std::move(out), outcome_kind_);
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

bool is_missing_token(const std::string& s) {
  const std::string l = lower(s);
  return l.empty() || l == "na" || l == "nan" || l == "null" || l == ".";
}

std::optional<double> parse_number(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string row_tag(std::size_t row) { return "row " + std::to_string(row); }

}  // namespace

Dataset parse_dataset(std::string_view csv_text, const CsvSchema& schema) {
  std::vector<std::string> lines;
  {
    std::string text(csv_text);
    if (text.rfind("\xEF\xBB\xBF", 0) == 0) text.erase(0, 3);
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (trim(line).empty() || line.front() == '#') continue;
      lines.push_back(line);
    }
  }
  if (lines.empty()) throw Error(ErrorCode::MissingColumn, "CSV has no header row");

  const auto header = split_csv_line(lines.front());
  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col.emplace(header[i], i);
  auto find = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = col.find(name);
    if (it == col.end()) return std::nullopt;
    return it->second;
  };

  const auto id_col = find(schema.id_column);
  const auto group_col = find(schema.group_column);
  if (!id_col) throw Error(ErrorCode::MissingColumn, "missing id column '" + schema.id_column + "'");
  if (!group_col) throw Error(ErrorCode::MissingColumn, "missing group column '" + schema.group_column + "'");
  const auto outcome_col = find(schema.outcome_column);
  const auto time_col = find(schema.time_column);
  const auto event_col = find(schema.event_column);
  if (time_col.has_value() != event_col.has_value())
    throw Error(ErrorCode::MissingColumn, "time and event columns must be given together");

  std::vector<std::string> cov_names = schema.covariates;
  if (cov_names.empty()) {
    const std::set<std::string> reserved{schema.id_column, schema.group_column, schema.outcome_column,
                                         schema.time_column, schema.event_column};
    for (const auto& h : header)
      if (!reserved.count(h)) cov_names.push_back(h);
  }
  if (cov_names.empty()) throw Error(ErrorCode::MissingColumn, "no covariate columns");
  std::vector<std::size_t> cov_cols;
  for (const auto& n : cov_names) {
    auto c = find(n);
    if (!c) throw Error(ErrorCode::MissingColumn, "missing covariate column '" + n + "'");
    cov_cols.push_back(*c);
  }

  if (lines.size() == 1) throw Error(ErrorCode::EmptyDataset, "CSV has a header but no rows");

  std::vector<PatientRecord> records;
  records.reserve(lines.size() - 1);
  bool all_binary = true;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::size_t row = li;  // 1-based data row
    const auto cells = split_csv_line(lines[li]);
    if (cells.size() != header.size())
      throw Error(ErrorCode::SchemaViolation, row_tag(row) + ": expected " + std::to_string(header.size()) +
                                                  " fields, got " + std::to_string(cells.size()));
    PatientRecord r;
    r.id = cells[*id_col];
    const std::string g = lower(cells[*group_col]);
    if (g == "trial") {
      r.group = Group::Trial;
    } else if (g == "external") {
      r.group = Group::External;
    } else {
      throw Error(ErrorCode::UnknownGroupLabel, row_tag(row) + ": group label '" + cells[*group_col] + "'");
    }
    r.covariates.reserve(cov_cols.size());
    for (std::size_t k = 0; k < cov_cols.size(); ++k) {
      const auto& cell = cells[cov_cols[k]];
      if (is_missing_token(cell))
        throw Error(ErrorCode::MissingValue, row_tag(row) + ": covariate '" + cov_names[k] + "' is missing");
      auto v = parse_number(cell);
      if (!v)
        throw Error(ErrorCode::NonNumericCovariate,
                    row_tag(row) + ": covariate '" + cov_names[k] + "' value '" + cell + "' is not numeric");
      r.covariates.push_back(*v);
    }
    if (outcome_col && !is_missing_token(cells[*outcome_col])) {
      auto v = parse_number(cells[*outcome_col]);
      if (!v) throw Error(ErrorCode::InvalidOutcome, row_tag(row) + ": outcome is not numeric");
      r.outcome = *v;
      if (*v != 0.0 && *v != 1.0) all_binary = false;
    }
    if (time_col) {
      const bool t_missing = is_missing_token(cells[*time_col]);
      const bool e_missing = is_missing_token(cells[*event_col]);
      if (t_missing != e_missing)
        throw Error(ErrorCode::InvalidOutcome, row_tag(row) + ": time and event must be given together");
      if (!t_missing) {
        auto t = parse_number(cells[*time_col]);
        auto e = parse_number(cells[*event_col]);
        if (!t || *t < 0.0) throw Error(ErrorCode::InvalidOutcome, row_tag(row) + ": invalid time");
        if (!e || (*e != 0.0 && *e != 1.0))
          throw Error(ErrorCode::InvalidOutcome, row_tag(row) + ": event must be 0 or 1");
        r.time = *t;
        r.event = *e == 1.0;
      }
    }
    records.push_back(std::move(r));
  }

  OutcomeKind kind;
  if (schema.outcome_kind) {
    kind = *schema.outcome_kind;
  } else if (time_col) {
    kind = OutcomeKind::TimeToEvent;
  } else {
    kind = all_binary ? OutcomeKind::Binary : OutcomeKind::Continuous;
  }

  Dataset data(std::move(cov_names), std::move(records), kind);
  if (schema.require_external && !data.has_external())
    throw Error(ErrorCode::EmptyDataset, "dataset has no external records");
  return data;
}

Dataset load_dataset(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_dataset(ss.str(), schema);
}

std::string dataset_to_csv(const Dataset& data) {
  const bool has_time = std::any_of(data.records().begin(), data.records().end(),
                                    [](const PatientRecord& r) { return r.time.has_value(); });
  std::ostringstream out;
  out << "id,group";
  for (const auto& n : data.covariate_names()) out << ',' << n;
  out << ",outcome";
  if (has_time) out << ",time,event";
  out << '\n';
  for (const auto& r : data.records()) {
    out << r.id << ',' << to_string(r.group);
    for (double v : r.covariates) out << ',' << format_double(v);
    out << ',' << (r.outcome ? format_double(*r.outcome) : "");
    if (has_time) {
      out << ',' << (r.time ? format_double(*r.time) : "");
      out << ',' << (r.event ? (*r.event ? "1" : "0") : "");
    }
    out << '\n';
  }
  return out.str();
}

void write_dataset(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out << dataset_to_csv(data);
}

// ---------------------------------------------------------------------------
// Aggregate summaries

double AggregateSummary::mean_of(const std::string& name) const {
  auto it = std::find(covariate_names.begin(), covariate_names.end(), name);
  if (it == covariate_names.end())
    throw Error(ErrorCode::UnknownCovariate, "aggregate has no covariate '" + name + "'");
  return covariate_means[static_cast<std::size_t>(it - covariate_names.begin())];
}

std::optional<double> AggregateSummary::sd_of(const std::string& name) const {
  auto it = std::find(covariate_names.begin(), covariate_names.end(), name);
  if (it == covariate_names.end())
    throw Error(ErrorCode::UnknownCovariate, "aggregate has no covariate '" + name + "'");
  return covariate_sds[static_cast<std::size_t>(it - covariate_names.begin())];
}

double AggregateSummary::outcome_value() const {
  switch (outcome_kind) {
    case OutcomeKind::Binary: return static_cast<double>(*responders) / n;
    case OutcomeKind::Continuous: return *outcome_mean;
    case OutcomeKind::TimeToEvent: return *survival;
  }
  return 0.0;
}

namespace {

double require_number(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_number())
    throw Error(ErrorCode::SchemaViolation, where + ": '" + key + "' must be a number");
  const double v = j.at(key).get<double>();
  if (!std::isfinite(v)) throw Error(ErrorCode::SchemaViolation, where + ": '" + key + "' is not finite");
  return v;
}

void check_proportion(double p, const std::string& what) {
  if (p < 0.0 || p > 1.0)
    throw Error(ErrorCode::ProportionOutOfRange, what + " = " + format_double(p) + " is outside [0,1]");
}

}  // namespace

AggregateSummary parse_aggregate(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::SchemaViolation, "aggregate summary must be a JSON object");
  AggregateSummary s;
  if (!j.contains("n") || !j.at("n").is_number_integer())
    throw Error(ErrorCode::SchemaViolation, "'n' must be an integer");
  const auto n = j.at("n").get<long long>();
  if (n <= 0) throw Error(ErrorCode::SchemaViolation, "'n' must be positive");
  s.n = static_cast<int>(n);

  if (!j.contains("covariates") || !j.at("covariates").is_object())
    throw Error(ErrorCode::SchemaViolation, "'covariates' must be an object");
  for (const auto& [name, v] : j.at("covariates").items()) {
    s.covariate_names.push_back(name);
    if (v.is_number()) {
      s.covariate_means.push_back(v.get<double>());
      s.covariate_sds.emplace_back();
    } else if (v.is_object() && v.contains("proportion")) {
      const double p = require_number(v, "proportion", "covariate '" + name + "'");
      check_proportion(p, "covariate '" + name + "' proportion");
      s.covariate_means.push_back(p);
      s.covariate_sds.emplace_back();
    } else if (v.is_object() && v.contains("mean")) {
      s.covariate_means.push_back(require_number(v, "mean", "covariate '" + name + "'"));
      if (v.contains("sd")) {
        const double sd = require_number(v, "sd", "covariate '" + name + "'");
        if (sd < 0.0) throw Error(ErrorCode::SchemaViolation, "covariate '" + name + "': negative sd");
        s.covariate_sds.emplace_back(sd);
      } else {
        s.covariate_sds.emplace_back();
      }
    } else {
      throw Error(ErrorCode::SchemaViolation, "covariate '" + name + "' must be a number or object");
    }
  }

  if (!j.contains("outcome") || !j.at("outcome").is_object())
    throw Error(ErrorCode::SchemaViolation, "'outcome' must be an object");
  const auto& o = j.at("outcome");
  if (!o.contains("kind") || !o.at("kind").is_string())
    throw Error(ErrorCode::SchemaViolation, "'outcome.kind' must be a string");
  s.outcome_kind = parse_outcome_kind(o.at("kind").get<std::string>());
  switch (s.outcome_kind) {
    case OutcomeKind::Binary: {
      if (!o.contains("responders") || !o.at("responders").is_number_integer())
        throw Error(ErrorCode::SchemaViolation, "'outcome.responders' must be an integer");
      const auto x = o.at("responders").get<long long>();
      if (x < 0) throw Error(ErrorCode::SchemaViolation, "'outcome.responders' must be nonnegative");
      if (x > n)
        throw Error(ErrorCode::ResponderCountExceedsN,
                    std::to_string(x) + " responders exceed n = " + std::to_string(n));
      s.responders = static_cast<int>(x);
      break;
    }
    case OutcomeKind::Continuous: {
      s.outcome_mean = require_number(o, "mean", "outcome");
      if (o.contains("sd")) {
        s.outcome_sd = require_number(o, "sd", "outcome");
        if (*s.outcome_sd < 0.0) throw Error(ErrorCode::SchemaViolation, "outcome sd must be nonnegative");
      }
      break;
    }
    case OutcomeKind::TimeToEvent: {
      s.survival = require_number(o, "survival", "outcome");
      check_proportion(*s.survival, "outcome survival");
      s.horizon = require_number(o, "horizon", "outcome");
      if (*s.horizon < 0.0) throw Error(ErrorCode::SchemaViolation, "outcome horizon must be nonnegative");
      break;
    }
  }
  return s;
}

AggregateSummary load_aggregate(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, std::string("malformed JSON: ") + e.what());
  }
  return parse_aggregate(j);
}

}  // namespace extctrl
