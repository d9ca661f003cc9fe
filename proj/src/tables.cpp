#include "sba/tables.hpp"

#include <cmath>
#include <map>

#include "sba/csv.hpp"
#include "sba/dataset.hpp"
#include "sba/error.hpp"
#include "sba/fairness.hpp"

namespace sba {

namespace {

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.filename().string() + " line " + std::to_string(line);
}

bool parse_flag(const std::string& cell, const std::string& ctx) {
  if (cell == "1") return true;
  if (cell == "0") return false;
  throw DataError(ctx + ": significance flag must be 0 or 1");
}

int as_int(const std::string& cell, const std::string& ctx) { return static_cast<int>(csv::parse_int(cell, ctx)); }

}  // namespace

std::vector<ResultRow> read_result_rows(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  const auto c_set = t.column("setting"), c_cond = t.column("condition"), c_feat = t.column("feature"),
             c_clf = t.column("classifier"), c_se = t.column("sensitivity"), c_sp = t.column("specificity"),
             c_uar = t.column("uar"), c_acc = t.column("accuracy");
  std::vector<ResultRow> rows;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const auto ctx = where(path, t.line_numbers[r]);
    if (row.size() != t.header.size()) throw DataError(ctx + ": wrong number of fields");
    rows.push_back({row[c_set], row[c_cond], row[c_feat], row[c_clf], csv::parse_double(row[c_se], ctx),
                    csv::parse_double(row[c_sp], ctx), csv::parse_double(row[c_uar], ctx),
                    csv::parse_double(row[c_acc], ctx), t.line_numbers[r]});
  }
  return rows;
}

std::vector<BiasCell> read_bias_cells(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  const auto c_cond = t.column("condition"), c_dim = t.column("dimension"), c_grp = t.column("group"),
             c_sp = t.column("sp"), c_se = t.column("se"), c_d = t.column("delta"),
             c_sig = t.column("delta_significant");
  std::vector<BiasCell> cells;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const auto ctx = where(path, t.line_numbers[r]);
    if (row.size() != t.header.size()) throw DataError(ctx + ": wrong number of fields");
    cells.push_back({row[c_cond], row[c_dim], row[c_grp], as_int(row[c_sp], ctx), as_int(row[c_se], ctx),
                     as_int(row[c_d], ctx), parse_flag(row[c_sig], ctx), t.line_numbers[r]});
  }
  return cells;
}

std::vector<BiasDisparityRow> read_bias_disparities(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  const auto c_cond = t.column("condition"), c_dim = t.column("dimension"), c_a = t.column("group_a"),
             c_b = t.column("group_b"), c_sp = t.column("delta_sp"), c_se = t.column("delta_se"),
             c_sps = t.column("delta_sp_significant"), c_ses = t.column("delta_se_significant");
  std::vector<BiasDisparityRow> rows;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const auto ctx = where(path, t.line_numbers[r]);
    if (row.size() != t.header.size()) throw DataError(ctx + ": wrong number of fields");
    rows.push_back({row[c_cond], row[c_dim], row[c_a], row[c_b], as_int(row[c_sp], ctx), as_int(row[c_se], ctx),
                    parse_flag(row[c_sps], ctx), parse_flag(row[c_ses], ctx), t.line_numbers[r]});
  }
  return rows;
}

std::vector<CheckOutcome> check_result_rows(const std::string& table, const std::vector<ResultRow>& rows,
                                            double tolerance) {
  std::vector<CheckOutcome> out;
  for (const auto& r : rows) {
    const double computed = (r.sensitivity / 100.0 + r.specificity / 100.0) / 2.0;
    const double expected = r.uar / 100.0;
    CheckOutcome c;
    c.table = table;
    c.item = r.setting + " " + r.condition + " " + r.feature + " " + r.classifier + " (line " +
             std::to_string(r.line) + "): UAR == (Se+Sp)/2";
    c.expected = expected;
    c.computed = computed;
    c.tolerance = tolerance;
    c.pass = std::abs(computed - expected) <= tolerance;
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<CheckOutcome> check_bias_table(const std::string& table, const std::vector<BiasCell>& cells,
                                           const std::vector<BiasDisparityRow>& disparities) {
  std::vector<CheckOutcome> out;
  // Whole-percent values are exact in double, so differences are compared exactly.
  std::map<std::string, SubgroupReport> reports;
  for (const auto& c : cells) {
    const auto dim = parse_dimension(c.dimension);
    auto rep = make_subgroup_report(SubgroupKey{dim, c.group}, 0, 0, static_cast<double>(c.se), static_cast<double>(c.sp));
    out.push_back({table, c.condition + " " + c.dimension + "=" + c.group + ": delta == Sp - Se",
                   static_cast<double>(c.delta), *rep.delta, 0.0, *rep.delta == static_cast<double>(c.delta)});
    reports[c.condition + "/" + c.dimension + "/" + c.group] = std::move(rep);
  }
  for (const auto& d : disparities) {
    const auto a = reports.find(d.condition + "/" + d.dimension + "/" + d.group_a);
    const auto b = reports.find(d.condition + "/" + d.dimension + "/" + d.group_b);
    if (a == reports.end() || b == reports.end()) {
      throw DataError(table + " line " + std::to_string(d.line) + ": disparity references a missing subgroup cell");
    }
    const auto rep = disparity(a->second, b->second);
    const std::string pair = d.condition + " " + d.dimension + " " + d.group_a + "-" + d.group_b;
    out.push_back({table, pair + ": Delta_Sp == Sp_A - Sp_B", static_cast<double>(d.delta_sp), *rep.delta_spec, 0.0,
                   *rep.delta_spec == static_cast<double>(d.delta_sp)});
    out.push_back({table, pair + ": Delta_Se == Se_A - Se_B", static_cast<double>(d.delta_se), *rep.delta_sens, 0.0,
                   *rep.delta_sens == static_cast<double>(d.delta_se)});
  }
  return out;
}

std::vector<CensusCell> read_census(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  const auto c_ci = t.column("ci"), c_g = t.column("gender"), c_imb = t.column("imbalanced"),
             c_cib = t.column("ci_balanced"), c_cigb = t.column("ci_gender_balanced");
  std::vector<CensusCell> cells;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const auto ctx = where(path, t.line_numbers[r]);
    if (row.size() != t.header.size()) throw DataError(ctx + ": wrong number of fields");
    CensusCell c;
    c.ci = parse_flag(row[c_ci], ctx);
    c.gender = std::string(to_string(parse_gender(row[c_g])));
    c.imbalanced = static_cast<std::size_t>(csv::parse_int(row[c_imb], ctx));
    c.ci_balanced = static_cast<std::size_t>(csv::parse_int(row[c_cib], ctx));
    c.ci_gender_balanced = static_cast<std::size_t>(csv::parse_int(row[c_cigb], ctx));
    cells.push_back(c);
  }
  return cells;
}

namespace {

std::string cell_name(bool ci, const std::string& gender) { return std::string(ci ? "CI-" : "NCI-") + gender; }

std::map<std::string, std::size_t> cell_counts(const Cohort& c) {
  std::map<std::string, std::size_t> n;
  for (const auto& s : c.members()) ++n[cell_name(s.labels.ci, std::string(to_string(s.record.gender)))];
  return n;
}

}  // namespace

std::vector<CheckOutcome> check_census(const std::vector<CensusCell>& census, std::uint64_t seed) {
  std::vector<SubjectRecord> records;
  std::size_t next = 0;
  for (const auto& cell : census) {
    for (std::size_t k = 0; k < cell.imbalanced; ++k, ++next) {
      SubjectRecord r;
      r.subject_id = "C" + std::to_string(next);
      r.utterance_id = "U" + std::to_string(next);
      r.gender = parse_gender(cell.gender);
      r.age = 70;
      r.mmse = cell.ci ? 18 : 29;
      records.push_back(std::move(r));
    }
  }
  const Cohort full = Cohort::from_records(records);
  const Cohort cigb = balance_ci_gender(full, seed);
  const Cohort cib = balance_ci(full, seed);
  const Cohort rem = remaining_after_balance(full, cigb);
  const auto n_cigb = cell_counts(cigb), n_rem = cell_counts(rem);

  std::map<bool, std::size_t> cib_expected, cib_got;
  for (const auto& cell : census) cib_expected[cell.ci] += cell.ci_balanced;
  for (const auto& s : cib.members()) ++cib_got[s.labels.ci];

  std::vector<CheckOutcome> out;
  auto add = [&](const std::string& item, std::size_t expected, std::size_t got) {
    out.push_back({"census", item, static_cast<double>(expected), static_cast<double>(got), 0.0, expected == got});
  };
  for (const auto& cell : census) {
    const auto name = cell_name(cell.ci, cell.gender);
    const auto lookup = [&](const std::map<std::string, std::size_t>& m) {
      const auto it = m.find(name);
      return it == m.end() ? std::size_t{0} : it->second;
    };
    add(name + " after CI-gender balancing", cell.ci_gender_balanced, lookup(n_cigb));
    add(name + " remaining after CI-gender balancing", cell.imbalanced - cell.ci_gender_balanced, lookup(n_rem));
  }
  add("CI total after CI balancing", cib_expected[true], cib_got[true]);
  add("NCI total after CI balancing", cib_expected[false], cib_got[false]);
  return out;
}

std::vector<CheckOutcome> table_check(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError("fixture directory not found: " + dir.string());
  std::vector<CheckOutcome> out;
  bool any = false;
  for (const auto& stem : kResultFixtures) {
    const auto p = dir / (stem + ".csv");
    if (!std::filesystem::exists(p)) continue;
    any = true;
    auto part = check_result_rows(stem, read_result_rows(p));
    out.insert(out.end(), part.begin(), part.end());
  }
  for (const auto& stem : kBiasFixtures) {
    const auto cells = dir / (stem + "_cells.csv");
    const auto disp = dir / (stem + "_disparities.csv");
    if (!std::filesystem::exists(cells) || !std::filesystem::exists(disp)) continue;
    any = true;
    auto part = check_bias_table(stem, read_bias_cells(cells), read_bias_disparities(disp));
    out.insert(out.end(), part.begin(), part.end());
  }
  if (std::filesystem::exists(dir / "census.csv")) {
    any = true;
    auto part = check_census(read_census(dir / "census.csv"));
    out.insert(out.end(), part.begin(), part.end());
  }
  if (!any) throw DataError("no table fixtures found in " + dir.string());
  return out;
}

}  // namespace sba
