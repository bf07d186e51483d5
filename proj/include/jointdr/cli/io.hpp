#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "jointdr/core/dataset.hpp"

namespace jointdr {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;  // 1-based source line where each row starts
};

/// RFC 4180 reader: quoted fields may hold commas, doubled quotes and line
/// breaks; CRLF and LF both end records; blank lines are skipped. Throws
/// InputError on ragged rows or an unterminated quote.
CsvTable read_csv(std::istream& in);

struct ColumnMapping {
  std::string y_col = "y";
  std::string z_col = "z";
  std::vector<std::string> covariate_cols;    // empty: every column except y and z, in file order
  std::vector<std::string> categorical_cols;  // subset of the covariates to one-hot expand
};

inline constexpr const char* kInterceptName = "intercept";

/// Builds a Dataset: an intercept column first, then the covariates in mapping
/// order. A categorical column with L levels becomes L - 1 dummies named
/// "col:level", dropping the lexicographically smallest level. Errors name the
/// offending column and source line.
Dataset ingest(const CsvTable& table, const ColumnMapping& mapping);
Dataset ingest(const std::filesystem::path& path, const ColumnMapping& mapping);

struct Split {
  std::vector<std::size_t> train;       // ascending
  std::vector<std::size_t> validation;  // ascending
};

/// Seeded permutation of 0..n-1; the first round(fraction·n) indices form the
/// training set. A deterministic function of (n, fraction, seed).
Split random_split(std::size_t n, double train_fraction, std::uint64_t seed);

/// Training rows listed one 0-based index per line; the rest form the validation set.
Split split_from_index_file(const std::filesystem::path& path, std::size_t n);
void write_index_file(const std::filesystem::path& path, const std::vector<std::size_t>& rows);

/// A conjunction "term && term && ..." with term "column op number" and op one
/// of < <= > >= == !=. The expression "all" (or an empty one) selects every row.
class CohortFilter {
 public:
  explicit CohortFilter(const std::string& expression);

  /// Row indices of `data` satisfying the filter; throws InputError for unknown columns.
  std::vector<std::size_t> select(const Dataset& data) const;
  const std::string& expression() const { return expression_; }

 private:
  struct Term {
    std::string column;
    std::string op;
    double value;
  };
  std::string expression_;
  std::vector<Term> terms_;
};

/// "name=expression" or a bare expression named after itself.
struct Cohort {
  std::string name;
  CohortFilter filter;
};
Cohort parse_cohort(const std::string& text);

}  // namespace jointdr
