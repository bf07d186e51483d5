#include "jointdr/cli/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "jointdr/core/error.hpp"
#include "jointdr/core/random.hpp"

namespace jointdr {

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::optional<double> parse_double(std::string_view s) {
  const auto t = trim(s);
  if (t.empty()) return std::nullopt;
  double v = 0.0;
  const auto* end = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(t.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::size_t column_index(const CsvTable& t, const std::string& name) {
  const auto it = std::find(t.header.begin(), t.header.end(), name);
  if (it == t.header.end()) throw InputError("column '" + name + "' not found in header");
  return static_cast<std::size_t>(it - t.header.begin());
}

std::string where(const CsvTable& t, std::size_t r, const std::string& col) {
  return "row " + std::to_string(r + 1) + " (line " + std::to_string(t.lines[r]) + "), column '" + col + "'";
}

const std::string& cell(const CsvTable& t, std::size_t r, std::size_t c, const std::string& col) {
  const auto& v = t.rows[r][c];
  if (trim(v).empty()) throw InputError("missing value at " + where(t, r, col));
  return v;
}

}  // namespace

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false, field_started = false, any = false;
  std::size_t line = 1, record_line = 1;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = record.size() == 1 && record[0].empty() && !any;
    if (!blank) {
      if (t.header.empty()) {
        t.header = std::move(record);
        for (auto& h : t.header) h = trim(h);
      } else {
        if (record.size() != t.header.size()) {
          throw InputError("line " + std::to_string(record_line) + " has " + std::to_string(record.size()) +
                           " fields, header has " + std::to_string(t.header.size()));
        }
        t.rows.push_back(std::move(record));
        t.lines.push_back(record_line);
      }
    }
    record.clear();
    any = false;
  };

  char ch;
  while (in.get(ch)) {
    if (quoted) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get();
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        if (ch == '\n') ++line;
        field += ch;
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (field_started && !trim(field).empty()) throw InputError("stray quote on line " + std::to_string(line));
        quoted = true;
        field_started = true;
        any = true;
        break;
      case ',':
        end_field();
        any = true;
        break;
      case '\r':
        if (in.peek() == '\n') break;
        [[fallthrough]];
      case '\n':
        end_record();
        ++line;
        record_line = line;
        break;
      default:
        field += ch;
        field_started = true;
        any = true;
    }
  }
  if (quoted) throw InputError("unterminated quoted field starting on line " + std::to_string(record_line));
  if (any || !field.empty()) end_record();
  if (t.header.empty()) throw InputError("CSV input has no header row");
  return t;
}

Dataset ingest(const CsvTable& t, const ColumnMapping& m) {
  const std::size_t yc = column_index(t, m.y_col), zc = column_index(t, m.z_col);
  std::vector<std::string> covs = m.covariate_cols;
  if (covs.empty()) {
    for (const auto& h : t.header) {
      if (h != m.y_col && h != m.z_col) covs.push_back(h);
    }
  }
  const std::set<std::string> cats(m.categorical_cols.begin(), m.categorical_cols.end());
  for (const auto& c : cats) {
    if (std::find(covs.begin(), covs.end(), c) == covs.end()) {
      throw InputError("categorical column '" + c + "' is not among the covariates");
    }
  }
  const std::size_t n = t.rows.size();
  if (n == 0) throw InputError("CSV input has no data rows");

  std::vector<std::string> names{kInterceptName};
  std::vector<std::vector<double>> cols{std::vector<double>(n, 1.0)};
  for (const auto& c : covs) {
    if (c == m.y_col || c == m.z_col) throw InputError("column '" + c + "' cannot be both outcome and covariate");
    const auto ci = column_index(t, c);
    if (cats.count(c)) {
      std::map<std::string, std::vector<std::size_t>> levels;
      for (std::size_t r = 0; r < n; ++r) levels[trim(cell(t, r, ci, c))].push_back(r);
      bool first = true;
      for (const auto& [level, rows] : levels) {
        if (first) {
          first = false;
          continue;
        }
        std::vector<double> d(n, 0.0);
        for (auto r : rows) d[r] = 1.0;
        names.push_back(c + ":" + level);
        cols.push_back(std::move(d));
      }
    } else {
      std::vector<double> v(n);
      for (std::size_t r = 0; r < n; ++r) {
        const auto p = parse_double(cell(t, r, ci, c));
        if (!p) throw InputError("unparsable number at " + where(t, r, c));
        v[r] = *p;
      }
      names.push_back(c);
      cols.push_back(std::move(v));
    }
  }

  std::vector<double> y(n);
  std::vector<int> z(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto py = parse_double(cell(t, r, yc, m.y_col));
    if (!py) throw InputError("unparsable number at " + where(t, r, m.y_col));
    y[r] = *py;
    const auto pz = parse_double(cell(t, r, zc, m.z_col));
    if (!pz || *pz < 0.0 || *pz != std::floor(*pz) || *pz > 1e9) {
      throw InputError("Z must be a non-negative integer at " + where(t, r, m.z_col));
    }
    z[r] = static_cast<int>(*pz);
  }

  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    for (std::size_t r = 0; r < n; ++r) x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = cols[j][r];
  }
  return Dataset(std::move(x), std::move(y), std::move(z), std::move(names));
}

Dataset ingest(const std::filesystem::path& path, const ColumnMapping& mapping) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open input file " + path.string());
  return ingest(read_csv(in), mapping);
}

Split random_split(std::size_t n, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw InputError("train_fraction must lie in (0, 1)");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed, substream(0x5b117, n));
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_open01(rng) * static_cast<double>(i));
    std::swap(perm[i - 1], perm[std::min(j, i - 1)]);
  }
  const auto cut = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  Split s;
  s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(cut));
  s.validation.assign(perm.begin() + static_cast<std::ptrdiff_t>(cut), perm.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.validation.begin(), s.validation.end());
  return s;
}

Split split_from_index_file(const std::filesystem::path& path, std::size_t n) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open index file " + path.string());
  std::vector<char> in_train(n, 0);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty()) continue;
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || v >= n) {
      throw InputError("bad row index on line " + std::to_string(lineno) + " of " + path.string());
    }
    if (in_train[v]) throw InputError("duplicate row index on line " + std::to_string(lineno));
    in_train[v] = 1;
  }
  Split s;
  for (std::size_t i = 0; i < n; ++i) (in_train[i] ? s.train : s.validation).push_back(i);
  return s;
}

void write_index_file(const std::filesystem::path& path, const std::vector<std::size_t>& rows) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write index file " + path.string());
  for (auto r : rows) out << r << '\n';
}

CohortFilter::CohortFilter(const std::string& expression) : expression_(trim(expression)) {
  if (expression_.empty() || expression_ == "all") return;
  std::size_t pos = 0;
  while (pos <= expression_.size()) {
    const auto amp = expression_.find("&&", pos);
    const auto term = trim(std::string_view(expression_).substr(pos, amp == std::string::npos ? std::string::npos : amp - pos));
    static const char* ops[] = {"<=", ">=", "==", "!=", "<", ">"};
    bool parsed = false;
    for (const char* op : ops) {
      const auto at = term.find(op);
      if (at == std::string::npos || at == 0) continue;
      const auto value = parse_double(std::string_view(term).substr(at + std::char_traits<char>::length(op)));
      if (!value) throw InputError("cohort term '" + term + "' needs a numeric right-hand side");
      terms_.push_back({trim(std::string_view(term).substr(0, at)), op, *value});
      parsed = true;
      break;
    }
    if (!parsed) throw InputError("cannot parse cohort term '" + term + "'");
    if (amp == std::string::npos) break;
    pos = amp + 2;
  }
}

std::vector<std::size_t> CohortFilter::select(const Dataset& data) const {
  std::vector<std::pair<Eigen::Index, const Term*>> bound;
  const auto& names = data.covariate_names();
  for (const auto& t : terms_) {
    const auto it = std::find(names.begin(), names.end(), t.column);
    if (it == names.end()) throw InputError("cohort filter references unknown column '" + t.column + "'");
    bound.emplace_back(static_cast<Eigen::Index>(it - names.begin()), &t);
  }
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < data.size(); ++i) {
    bool keep = true;
    for (const auto& [col, t] : bound) {
      const double v = data.x()(static_cast<Eigen::Index>(i), col);
      const auto& op = t->op;
      const bool ok = op == "<"    ? v < t->value
                      : op == "<=" ? v <= t->value
                      : op == ">"  ? v > t->value
                      : op == ">=" ? v >= t->value
                      : op == "==" ? v == t->value
                                   : v != t->value;
      if (!ok) {
        keep = false;
        break;
      }
    }
    if (keep) rows.push_back(i);
  }
  return rows;
}

Cohort parse_cohort(const std::string& text) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '=') continue;
    const bool part_of_op = (i + 1 < text.size() && text[i + 1] == '=') ||
                            (i > 0 && std::string_view("<>!=").find(text[i - 1]) != std::string_view::npos);
    if (part_of_op) {
      ++i;
      continue;
    }
    return {trim(std::string_view(text).substr(0, i)), CohortFilter(text.substr(i + 1))};
  }
  const auto expr = trim(text);
  return {expr.empty() ? "all" : expr, CohortFilter(text)};
}

}  // namespace jointdr
