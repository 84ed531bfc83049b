#include "autolf/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include "autolf/errors.hpp"
#include "autolf/rng.hpp"
#include "json.hpp"

namespace autolf {

using nlohmann::json;

LabelSpace::LabelSpace(std::vector<std::string> class_names)
    : names_(std::move(class_names)) {
  if (names_.size() < 2) {
    throw PreconditionError("label space needs at least 2 classes");
  }
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw PreconditionError("empty class name");
    if (!seen.insert(n).second) {
      throw PreconditionError("duplicate class name: " + n);
    }
  }
}

const std::string& LabelSpace::name(ClassIndex k) const {
  if (!contains(k)) {
    throw PreconditionError("class index out of range: " + std::to_string(k));
  }
  return names_[static_cast<std::size_t>(k)];
}

std::optional<ClassIndex> LabelSpace::index_of(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<ClassIndex>(it - names_.begin());
}

std::vector<LabeledExample> Dataset::unlabeled_with_gold() const {
  std::vector<LabeledExample> out;
  for (std::size_t i = 0; i < unlabeled.size(); ++i) {
    if (i < unlabeled_gold.size() && unlabeled_gold[i]) {
      out.push_back({unlabeled[i], *unlabeled_gold[i]});
    }
  }
  return out;
}

bool Dataset::has_unlabeled_gold() const {
  return std::any_of(unlabeled_gold.begin(), unlabeled_gold.end(),
                     [](const auto& g) { return g.has_value(); });
}

void validate(const Dataset& dataset) {
  if (dataset.unlabeled.empty()) {
    throw PreconditionError("dataset has no unlabeled documents");
  }
  if (dataset.seed.empty()) {
    throw PreconditionError("dataset has no labeled seed examples");
  }
  std::unordered_set<std::string> ids;
  auto check_id = [&](const std::string& id) {
    if (!ids.insert(id).second) throw DuplicateId(id);
  };
  for (const auto& d : dataset.unlabeled) check_id(d.id);
  for (const auto& e : dataset.seed) check_id(e.doc.id);
  for (const auto& e : dataset.test) check_id(e.doc.id);
  auto check_gold = [&](ClassIndex g) {
    if (!dataset.labels.contains(g)) {
      throw UnknownLabel("class index " + std::to_string(g));
    }
  };
  for (const auto& e : dataset.seed) check_gold(e.gold);
  for (const auto& e : dataset.test) check_gold(e.gold);
  for (const auto& g : dataset.unlabeled_gold) {
    if (g) check_gold(*g);
  }
}

namespace {

struct RawRecord {
  std::size_t line = 0;
  std::string id;
  std::string text;
  std::optional<std::string> label;
  std::optional<std::string> split;
};

std::vector<RawRecord> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<RawRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw MalformedRecord(line_no, "invalid JSON");
    }
    if (!j.is_object()) throw MalformedRecord(line_no, "record is not an object");
    RawRecord r;
    r.line = line_no;
    auto get_string = [&](const char* key, bool required) -> std::optional<std::string> {
      auto it = j.find(key);
      if (it == j.end() || it->is_null()) {
        if (required) throw MalformedRecord(line_no, std::string("missing \"") + key + "\"");
        return std::nullopt;
      }
      if (!it->is_string()) {
        throw MalformedRecord(line_no, std::string("\"") + key + "\" is not a string");
      }
      return it->get<std::string>();
    };
    r.id = *get_string("id", true);
    r.text = *get_string("text", true);
    r.label = get_string("label", false);
    r.split = get_string("split", false);
    records.push_back(std::move(r));
  }
  return records;
}

// RFC 4180 style: quoted fields may contain commas, quotes ("") and newlines.
std::vector<std::pair<std::size_t, std::vector<std::string>>> parse_csv(
    std::istream& in) {
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  std::size_t row_line = 1;
  auto end_row = [&] {
    if (field_started || !row.empty()) {
      row.push_back(std::move(field));
      rows.emplace_back(row_line, std::move(row));
    }
    row.clear();
    field.clear();
    field_started = false;
  };
  for (std::size_t i = 0; i < content.size(); ++i) {
    const char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        ++line;
        row_line = line;
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (in_quotes) throw MalformedRecord(row_line, "unterminated quoted field");
  end_row();
  return rows;
}

std::vector<RawRecord> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  auto rows = parse_csv(in);
  if (rows.empty()) return {};
  const auto& header = rows.front().second;
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  if (!col.count("id") || !col.count("text")) {
    throw MalformedRecord(rows.front().first, "header must contain id,text");
  }
  std::vector<RawRecord> records;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& [line, fields] = rows[r];
    if (fields.size() != header.size()) {
      throw MalformedRecord(line, "expected " + std::to_string(header.size()) +
                                      " fields, got " + std::to_string(fields.size()));
    }
    RawRecord rec;
    rec.line = line;
    rec.id = fields[col["id"]];
    rec.text = fields[col["text"]];
    if (col.count("label") && !fields[col["label"]].empty()) {
      rec.label = fields[col["label"]];
    }
    if (col.count("split") && !fields[col["split"]].empty()) {
      rec.split = fields[col["split"]];
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<RawRecord> read_records(const std::filesystem::path& path,
                                    DataFormat format) {
  if (!std::filesystem::exists(path)) {
    throw IoError("dataset file not found: " + path.string());
  }
  return format == DataFormat::Csv ? read_csv(path) : read_jsonl(path);
}

DataFormat format_for(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? DataFormat::Csv : DataFormat::Jsonl;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path, DataFormat format,
                     const LabelSpace& labels) {
  const auto records = read_records(path, format);
  Dataset ds;
  ds.labels = labels;
  std::unordered_set<std::string> ids[3];
  for (const auto& r : records) {
    Split split = Split::Unlabeled;
    if (r.split) {
      if (*r.split == "unlabeled") {
        split = Split::Unlabeled;
      } else if (*r.split == "seed") {
        split = Split::Seed;
      } else if (*r.split == "test") {
        split = Split::Test;
      } else {
        throw MalformedRecord(r.line, "unknown split \"" + *r.split + "\"");
      }
    }
    if (!ids[static_cast<int>(split)].insert(r.id).second) throw DuplicateId(r.id);
    std::optional<ClassIndex> gold;
    if (r.label) {
      gold = labels.index_of(*r.label);
      if (!gold) throw UnknownLabel(*r.label);
    }
    Document doc{r.id, r.text};
    switch (split) {
      case Split::Unlabeled:
        ds.unlabeled.push_back(std::move(doc));
        ds.unlabeled_gold.push_back(gold);
        break;
      case Split::Seed:
      case Split::Test:
        if (!gold) throw MalformedRecord(r.line, "labeled split requires \"label\"");
        (split == Split::Seed ? ds.seed : ds.test).push_back({std::move(doc), *gold});
        break;
    }
  }
  validate(ds);
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path, const LabelSpace& labels) {
  return load_dataset(path, format_for(path), labels);
}

LabelSpace infer_label_space(const std::filesystem::path& path, DataFormat format) {
  std::set<std::string> names;
  for (const auto& r : read_records(path, format)) {
    if (r.label) names.insert(*r.label);
  }
  return LabelSpace(std::vector<std::string>(names.begin(), names.end()));
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string csv_escape(const std::string& field) { return csv_field(field); }

std::vector<std::vector<std::string>> parse_csv_rows(std::istream& in) {
  std::vector<std::vector<std::string>> out;
  for (auto& [line, row] : parse_csv(in)) out.push_back(std::move(row));
  return out;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path,
                  DataFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  auto emit = [&](const Document& doc, std::optional<ClassIndex> gold,
                  const char* split) {
    if (format == DataFormat::Jsonl) {
      json j = {{"id", doc.id}, {"text", doc.text}};
      if (gold) j["label"] = dataset.labels.name(*gold);
      j["split"] = split;
      out << j.dump() << '\n';
    } else {
      out << csv_field(doc.id) << ',' << csv_field(doc.text) << ','
          << (gold ? csv_field(dataset.labels.name(*gold)) : std::string()) << ','
          << split << '\n';
    }
  };
  if (format == DataFormat::Csv) out << "id,text,label,split\n";
  for (std::size_t i = 0; i < dataset.unlabeled.size(); ++i) {
    std::optional<ClassIndex> gold;
    if (i < dataset.unlabeled_gold.size()) gold = dataset.unlabeled_gold[i];
    emit(dataset.unlabeled[i], gold, "unlabeled");
  }
  for (const auto& e : dataset.seed) emit(e.doc, e.gold, "seed");
  for (const auto& e : dataset.test) emit(e.doc, e.gold, "test");
}

std::size_t round_half_up(double x) {
  // Tolerates representation error such as 0.015 * 100 = 1.4999999999999998.
  return static_cast<std::size_t>(std::floor(x + 0.5 + 1e-9));
}

SeedSplit stratified_seed_sample(const std::vector<LabeledExample>& examples,
                                 double fraction, std::uint64_t rng_seed,
                                 bool stratified) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw PreconditionError("fraction must be in (0, 1]");
  }
  Rng rng = make_rng(rng_seed);
  std::vector<std::size_t> chosen;
  if (!stratified) {
    const std::size_t k = round_half_up(fraction * static_cast<double>(examples.size()));
    if (k == 0) throw EmptySelection("sample size rounds to 0");
    std::vector<std::size_t> order(examples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle(order, rng);
    chosen.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  } else {
    std::map<ClassIndex, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < examples.size(); ++i) {
      by_class[examples[i].gold].push_back(i);
    }
    for (auto& [cls, members] : by_class) {
      shuffle(members, rng);
      const std::size_t k = round_half_up(fraction * static_cast<double>(members.size()));
      chosen.insert(chosen.end(), members.begin(),
                    members.begin() + static_cast<std::ptrdiff_t>(k));
    }
    if (chosen.empty()) throw EmptySelection("stratified sample size rounds to 0");
  }
  std::vector<bool> in_seed(examples.size(), false);
  for (auto i : chosen) in_seed[i] = true;
  SeedSplit out;
  for (auto i : chosen) out.seed.push_back(examples[i]);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (!in_seed[i]) out.remainder.push_back(examples[i]);
  }
  return out;
}

}  // namespace autolf
