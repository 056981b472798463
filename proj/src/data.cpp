#include "ufce/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "ufce/errors.hpp"
#include "ufce/random.hpp"

namespace ufce {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(first, last - first + 1));
  if (out.size() >= 3 && static_cast<unsigned char>(out[0]) == 0xEF &&
      static_cast<unsigned char>(out[1]) == 0xBB && static_cast<unsigned char>(out[2]) == 0xBF) {
    out.erase(0, 3);
  }
  return out;
}

// Minimal RFC 4180 field splitter: quoted fields may contain commas and
// doubled quotes, but not line breaks.
std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{} || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

bool label_matches(const std::string& cell, const std::string& positive) {
  if (cell == positive) return true;
  const auto a = parse_number(cell);
  const auto b = parse_number(positive);
  return a && b && *a == *b;
}

std::uint64_t fnv1a(std::uint64_t h, std::string_view s) {
  for (const unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::optional<std::size_t> Schema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t Schema::require_index(std::string_view name) const {
  if (auto i = index_of(name)) return *i;
  throw SchemaError("unknown feature '" + std::string(name) + "'");
}

std::vector<std::size_t> Schema::numeric_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].is_numeric()) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> Schema::categorical_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].is_categorical()) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> Schema::protected_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].is_protected) out.push_back(i);
  }
  return out;
}

std::vector<double> Schema::mads() const {
  std::vector<double> out;
  out.reserve(features.size());
  for (const auto& f : features) out.push_back(f.mad);
  return out;
}

std::vector<std::string> Schema::names() const {
  std::vector<std::string> out;
  out.reserve(features.size());
  for (const auto& f : features) out.push_back(f.name);
  return out;
}

std::uint64_t Schema::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  std::ostringstream os;
  os.precision(17);
  for (const auto& f : features) {
    os << f.name << '|' << (f.is_numeric() ? 'n' : 'c') << '|';
    if (f.is_categorical()) os << f.categories[0] << ',' << f.categories[1];
    os << '|' << (f.is_protected ? 1 : 0) << ';';
  }
  os << "label=" << label << ";positive=" << positive_class;
  return fnv1a(h, os.str());
}

std::string Schema::hash_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
  return buf;
}

Instance Instance::without(std::size_t i) const {
  Instance out;
  out.values.reserve(values.size() - 1);
  for (std::size_t c = 0; c < values.size(); ++c) {
    if (c != i) out.values.push_back(values[c]);
  }
  return out;
}

std::vector<double> Dataset::column(std::size_t i) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[i]);
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.schema = schema;
  out.rows.reserve(indices.size());
  out.labels.reserve(indices.size());
  for (const auto i : indices) {
    out.rows.push_back(rows.at(i));
    out.labels.push_back(labels.at(i));
  }
  return out;
}

void Dataset::validate() const {
  if (rows.size() != labels.size()) throw SchemaError("rows and labels differ in length");
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != schema.size()) {
      throw SchemaError("row " + std::to_string(r) + " has " + std::to_string(rows[r].size()) +
                        " values, schema has " + std::to_string(schema.size()));
    }
    if (labels[r] != 0 && labels[r] != 1) throw SchemaError("label outside {0,1}");
    for (std::size_t c = 0; c < schema.size(); ++c) {
      const auto& f = schema[c];
      if (f.is_categorical() && rows[r][c] != f.categories[0] && rows[r][c] != f.categories[1]) {
        throw SchemaError("row " + std::to_string(r) + " holds an unknown code for '" + f.name + "'");
      }
    }
  }
}

SchemaConfig SchemaConfig::from_json_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("schema descriptor is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("label") || !doc["label"].is_string()) {
    throw SchemaError("schema descriptor needs a string 'label'");
  }
  SchemaConfig cfg;
  cfg.label = doc["label"].get<std::string>();
  if (doc.contains("categorical")) cfg.categorical = doc["categorical"].get<std::vector<std::string>>();
  if (doc.contains("protected")) cfg.protected_features = doc["protected"].get<std::vector<std::string>>();
  if (doc.contains("positive_class")) {
    const auto& pc = doc["positive_class"];
    cfg.positive_class = pc.is_string() ? pc.get<std::string>() : pc.dump();
  }
  return cfg;
}

SchemaConfig SchemaConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open schema descriptor " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

Dataset load_dataset(const std::filesystem::path& csv_path, const SchemaConfig& config) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + csv_path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_dataset(ss.str(), config);
}

Dataset parse_dataset(const std::string& csv_text, const SchemaConfig& config) {
  std::istringstream in(csv_text);
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) {
      header = split_csv_line(trim(line));
      break;
    }
  }
  if (header.empty()) throw ParseError("empty file: no header row");

  std::unordered_map<std::string, std::size_t> column_of;
  for (std::size_t c = 0; c < header.size(); ++c) column_of[header[c]] = c;
  auto require = [&](const std::string& name) {
    auto it = column_of.find(name);
    if (it == column_of.end()) throw SchemaError("missing column '" + name + "'");
    return it->second;
  };
  const std::size_t label_col = require(config.label);
  const std::set<std::string> categorical(config.categorical.begin(), config.categorical.end());
  const std::set<std::string> protected_set(config.protected_features.begin(),
                                            config.protected_features.end());
  for (const auto& name : categorical) require(name);
  for (const auto& name : protected_set) require(name);

  Dataset ds;
  ds.schema.label = config.label;
  ds.schema.positive_class = config.positive_class;
  std::vector<std::size_t> source_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == label_col) continue;
    FeatureSchema f;
    f.name = header[c];
    f.kind = categorical.count(f.name) ? FeatureKind::categorical : FeatureKind::numeric;
    f.is_protected = protected_set.count(f.name) > 0;
    ds.schema.features.push_back(f);
    source_cols.push_back(c);
  }

  std::size_t row_number = 0;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty()) continue;
    ++row_number;
    const auto fields = split_csv_line(t);
    if (fields.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                           std::to_string(fields.size()),
                       row_number);
    }
    Instance inst;
    inst.values.reserve(source_cols.size());
    for (std::size_t k = 0; k < source_cols.size(); ++k) {
      const auto& cell = fields[source_cols[k]];
      if (cell.empty()) {
        throw ParseError("missing value in column '" + ds.schema[k].name + "'", row_number);
      }
      const auto v = parse_number(cell);
      if (!v) {
        throw ParseError("non-numeric value '" + cell + "' in column '" + ds.schema[k].name + "'",
                         row_number);
      }
      inst.values.push_back(*v);
    }
    const auto& label_cell = fields[label_col];
    if (label_cell.empty()) throw ParseError("missing label", row_number);
    ds.labels.push_back(label_matches(label_cell, config.positive_class) ? 1 : 0);
    ds.rows.push_back(std::move(inst));
  }
  if (ds.rows.empty()) throw ParseError("no data rows");

  for (std::size_t k = 0; k < ds.schema.size(); ++k) {
    auto& f = ds.schema[k];
    if (!f.is_categorical()) continue;
    std::set<double> codes;
    for (const auto& r : ds.rows) codes.insert(r[k]);
    if (codes.size() > 2) {
      throw CardinalityError("categorical column '" + f.name + "' has " +
                             std::to_string(codes.size()) + " distinct codes; only binary is supported");
    }
    const double lo = *codes.begin();
    const double hi = *codes.rbegin();
    if (codes.size() == 2) {
      f.categories = {lo, hi};
    } else if (lo == 0.0 || lo == 1.0) {
      f.categories = {0.0, 1.0};
    } else {
      f.categories = {lo, lo + 1.0};
    }
  }
  refit_statistics(ds.schema, ds.rows);
  return ds;
}

double median(std::vector<double> values) {
  if (values.empty()) throw ArgumentError("median of an empty list");
  const std::size_t n = values.size();
  const std::size_t mid = n / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return lower + (upper - lower) / 2.0;
}

double compute_mad(std::span<const double> values) {
  if (values.empty()) throw ArgumentError("compute_mad needs a non-empty list");
  const double m = median(std::vector<double>(values.begin(), values.end()));
  std::vector<double> dev;
  dev.reserve(values.size());
  for (const double v : values) dev.push_back(std::fabs(v - m));
  return median(std::move(dev));
}

void refit_statistics(Schema& schema, std::span<const Instance> rows) {
  if (rows.empty()) throw ArgumentError("cannot compute statistics without rows");
  for (std::size_t k = 0; k < schema.size(); ++k) {
    std::vector<double> col;
    col.reserve(rows.size());
    for (const auto& r : rows) col.push_back(r[k]);
    auto [lo, hi] = std::minmax_element(col.begin(), col.end());
    schema[k].observed_min = *lo;
    schema[k].observed_max = *hi;
    schema[k].mad = compute_mad(col);
  }
}

std::vector<std::size_t> desired_space_indices(const Dataset& dataset, int t) {
  if (t != 0 && t != 1) throw ArgumentError("desired label must be 0 or 1");
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset.labels[i] == t) idx.push_back(i);
  }
  return idx;
}

Dataset desired_space(const Dataset& dataset, int t) {
  const auto idx = desired_space_indices(dataset, t);
  if (idx.empty()) {
    throw DesiredSpaceEmpty("no row carries label " + std::to_string(t) + "; explanation impossible");
  }
  return dataset.subset(idx);
}

std::vector<Fold> split_folds(const Dataset& dataset, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ArgumentError("split_folds needs k >= 2");
  const std::size_t n = dataset.size();
  if (k > n) throw ArgumentError("split_folds: k=" + std::to_string(k) + " exceeds " + std::to_string(n) + " rows");

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  shuffle(order, rng);

  std::vector<Fold> folds;
  folds.reserve(k);
  std::size_t start = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t len = n / k + (f < n % k ? 1 : 0);
    std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(start),
                                  order.begin() + static_cast<std::ptrdiff_t>(start + len));
    std::sort(test.begin(), test.end());
    std::vector<bool> in_test(n, false);
    for (const auto i : test) in_test[i] = true;
    std::vector<std::size_t> train;
    train.reserve(n - len);
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_test[i]) train.push_back(i);
    }
    Fold fold;
    fold.train = dataset.subset(train);
    refit_statistics(fold.train.schema, fold.train.rows);
    fold.test = dataset.subset(test);
    fold.test.schema = fold.train.schema;
    fold.train_indices = std::move(train);
    fold.test_indices = std::move(test);
    folds.push_back(std::move(fold));
    start += len;
  }
  return folds;
}

Scaler::Scaler(std::vector<double> min, std::vector<double> max, std::vector<bool> numeric)
    : min_(std::move(min)), max_(std::move(max)), numeric_(std::move(numeric)) {
  if (min_.size() != max_.size() || min_.size() != numeric_.size()) {
    throw ArgumentError("scaler vectors differ in length");
  }
  for (std::size_t i = 0; i < min_.size(); ++i) {
    if (max_[i] < min_[i]) throw ArgumentError("scaler max below min");
  }
}

double Scaler::apply(std::size_t feature, double value) const {
  if (!numeric_[feature]) return value;
  const double range = max_[feature] - min_[feature];
  if (range <= 0.0) return 0.0;
  return (value - min_[feature]) / range;
}

double Scaler::invert(std::size_t feature, double value) const {
  if (!numeric_[feature]) return value;
  return min_[feature] + value * (max_[feature] - min_[feature]);
}

Instance Scaler::apply(const Instance& raw) const {
  if (raw.size() != dimension()) throw ArgumentError("scaler dimension mismatch");
  Instance out;
  out.values.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out.values[i] = apply(i, raw[i]);
  return out;
}

Instance Scaler::invert(const Instance& normalized) const {
  if (normalized.size() != dimension()) throw ArgumentError("scaler dimension mismatch");
  Instance out;
  out.values.resize(normalized.size());
  for (std::size_t i = 0; i < normalized.size(); ++i) out.values[i] = invert(i, normalized[i]);
  return out;
}

Scaler fit_scaler(const Dataset& dataset) {
  if (dataset.empty()) throw ArgumentError("fit_scaler needs a non-empty dataset");
  const std::size_t d = dataset.dimension();
  std::vector<double> lo(d, std::numeric_limits<double>::infinity());
  std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
  std::vector<bool> numeric(d);
  for (std::size_t i = 0; i < d; ++i) numeric[i] = dataset.schema[i].is_numeric();
  for (const auto& r : dataset.rows) {
    for (std::size_t i = 0; i < d; ++i) {
      lo[i] = std::min(lo[i], r[i]);
      hi[i] = std::max(hi[i], r[i]);
    }
  }
  return Scaler(std::move(lo), std::move(hi), std::move(numeric));
}

}  // namespace ufce
