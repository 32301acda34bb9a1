#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "parasitometrics/csv.hpp"
#include "parasitometrics/datamodel.hpp"

namespace parasitometrics {

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIoError, "cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) fail(ErrorCode::kIoError, "write to '" + path.string() + "' failed");
}

inline void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    fail(ErrorCode::kIoError, "cannot create output directory '" + dir.string() + "'");
  }
}

/// Joins the patients and objects tables (CSV text) into a validated cohort.
inline CohortDataset ingest_cohort_csv(const std::string& objects_csv,
                                       const std::string& patients_csv,
                                       const std::string& cv_description,
                                       const std::string& provenance = {}) {
  const csv::Table pt(csv::parse(patients_csv),
                      {"patient_id", "ground_truth", "species", "true_parasitemia",
                       "examined_volume", "wbc_count"},
                      "patients file");
  const csv::Table ot(csv::parse(objects_csv), {"patient_id", "object_id", "score", "true_label"},
                      "objects file");

  std::vector<PatientRecord> patients;
  patients.reserve(pt.size());
  std::map<std::string, std::size_t> by_id;
  for (std::size_t r = 0; r < pt.size(); ++r) {
    PatientRecord p;
    p.patient_id = pt.at(r, "patient_id");
    p.ground_truth = parse_ground_truth(pt.at(r, "ground_truth"));
    p.species = parse_species(pt.at(r, "species"));
    p.true_parasitemia = csv::parse_number(pt.at(r, "true_parasitemia"), "true_parasitemia");
    p.examined_volume = csv::parse_number(pt.at(r, "examined_volume"), "examined_volume");
    if (const auto& w = pt.at(r, "wbc_count"); !w.empty()) {
      p.wbc_count = static_cast<int>(csv::parse_integer(w, "wbc_count"));
    }
    if (!by_id.emplace(p.patient_id, patients.size()).second) {
      fail(ErrorCode::kDuplicatePatient, "duplicate patient_id '" + p.patient_id + "'");
    }
    patients.push_back(std::move(p));
  }

  for (std::size_t r = 0; r < ot.size(); ++r) {
    const auto& pid = ot.at(r, "patient_id");
    auto it = by_id.find(pid);
    if (it == by_id.end()) {
      fail(ErrorCode::kMissingPatient, "object row " + std::to_string(r + 2) +
                                           " references unknown patient_id '" + pid + "'");
    }
    ObjectRecord o;
    o.object_id = ot.at(r, "object_id");
    o.score = csv::parse_number(ot.at(r, "score"), "score");
    o.true_label = parse_label(ot.at(r, "true_label"));
    patients[it->second].objects.push_back(std::move(o));
  }
  return CohortDataset(cv_description, std::move(patients), provenance);
}

inline CohortDataset ingest_cohort(const std::filesystem::path& objects_file,
                                   const std::filesystem::path& patients_file,
                                   const std::string& cv_description) {
  return ingest_cohort_csv(read_text_file(objects_file), read_text_file(patients_file),
                           cv_description, patients_file.string());
}

inline std::string export_patients_csv(const CohortDataset& cohort) {
  std::ostringstream os;
  csv::write_row(os, {"patient_id", "ground_truth", "species", "true_parasitemia",
                      "examined_volume", "wbc_count"});
  for (const auto& p : cohort.patients()) {
    csv::write_row(os, {p.patient_id, std::string(ground_truth_code(p.ground_truth)),
                        std::string(species_code(p.species)),
                        csv::format_number(p.true_parasitemia),
                        csv::format_number(p.examined_volume),
                        p.wbc_count ? std::to_string(*p.wbc_count) : std::string()});
  }
  return os.str();
}

inline std::string export_objects_csv(const CohortDataset& cohort) {
  std::ostringstream os;
  csv::write_row(os, {"patient_id", "object_id", "score", "true_label"});
  for (const auto& p : cohort.patients()) {
    for (const auto& o : p.objects) {
      csv::write_row(os, {p.patient_id, o.object_id, csv::format_number(o.score),
                          std::string(label_code(o.true_label))});
    }
  }
  return os.str();
}

inline nlohmann::ordered_json cohort_to_json(const CohortDataset& cohort) {
  nlohmann::ordered_json doc;
  doc["cv_description"] = cohort.cv_description();
  doc["provenance"] = cohort.provenance();
  auto& arr = doc["patients"] = nlohmann::ordered_json::array();
  for (const auto& p : cohort.patients()) {
    nlohmann::ordered_json jp;
    jp["patient_id"] = p.patient_id;
    jp["ground_truth"] = ground_truth_code(p.ground_truth);
    jp["species"] = species_code(p.species);
    jp["true_parasitemia"] = p.true_parasitemia;
    jp["examined_volume"] = p.examined_volume;
    jp["wbc_count"] = p.wbc_count ? nlohmann::ordered_json(*p.wbc_count) : nlohmann::ordered_json();
    auto& objs = jp["objects"] = nlohmann::ordered_json::array();
    for (const auto& o : p.objects) {
      objs.push_back({{"object_id", o.object_id},
                      {"score", o.score},
                      {"true_label", label_code(o.true_label)}});
    }
    arr.push_back(std::move(jp));
  }
  return doc;
}

namespace detail {

template <typename T>
T json_field(const nlohmann::json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) fail(ErrorCode::kSchemaError, where + ": missing field '" + key + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorCode::kSchemaError, where + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace detail

inline CohortDataset cohort_from_json(const nlohmann::json& doc, const std::string& provenance = {}) {
  if (!doc.is_object()) fail(ErrorCode::kSchemaError, "cohort JSON must be an object");
  const auto cv = detail::json_field<std::string>(doc, "cv_description", "cohort");
  const auto& arr = doc.contains("patients") ? doc["patients"] : nlohmann::json();
  if (!arr.is_array()) fail(ErrorCode::kSchemaError, "cohort: 'patients' must be an array");
  std::vector<PatientRecord> patients;
  for (const auto& jp : arr) {
    PatientRecord p;
    p.patient_id = detail::json_field<std::string>(jp, "patient_id", "patient");
    const std::string where = "patient '" + p.patient_id + "'";
    p.ground_truth = parse_ground_truth(detail::json_field<std::string>(jp, "ground_truth", where));
    p.species = parse_species(detail::json_field<std::string>(jp, "species", where));
    p.true_parasitemia = detail::json_field<double>(jp, "true_parasitemia", where);
    p.examined_volume = detail::json_field<double>(jp, "examined_volume", where);
    if (auto w = jp.find("wbc_count"); w != jp.end() && !w->is_null()) {
      if (!w->is_number_integer()) fail(ErrorCode::kSchemaError, where + ": wbc_count must be an integer");
      p.wbc_count = w->get<int>();
    }
    if (auto objs = jp.find("objects"); objs != jp.end()) {
      if (!objs->is_array()) fail(ErrorCode::kSchemaError, where + ": 'objects' must be an array");
      for (const auto& jo : *objs) {
        ObjectRecord o;
        o.object_id = detail::json_field<std::string>(jo, "object_id", where);
        o.score = detail::json_field<double>(jo, "score", where);
        o.true_label = parse_label(detail::json_field<std::string>(jo, "true_label", where));
        p.objects.push_back(std::move(o));
      }
    }
    patients.push_back(std::move(p));
  }
  std::string prov = provenance;
  if (prov.empty() && doc.contains("provenance") && doc["provenance"].is_string()) {
    prov = doc["provenance"].get<std::string>();
  }
  return CohortDataset(cv, std::move(patients), prov);
}

inline CohortDataset load_cohort_json(const std::filesystem::path& file) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(file));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::kSchemaError, "'" + file.string() + "' is not valid JSON: " + e.what());
  }
  return cohort_from_json(doc, file.string());
}

/// Loads a cohort from either a JSON document or a directory holding
/// patients.csv and objects.csv.
inline CohortDataset load_cohort(const std::filesystem::path& path,
                                 const std::string& cv_description = "1 uL blood") {
  if (std::filesystem::is_directory(path)) {
    return ingest_cohort(path / "objects.csv", path / "patients.csv", cv_description);
  }
  return load_cohort_json(path);
}

inline void write_cohort(const CohortDataset& cohort, const std::filesystem::path& dir,
                         bool as_json) {
  ensure_directory(dir);
  if (as_json) {
    write_text_file(dir / "cohort.json", cohort_to_json(cohort).dump(2) + "\n");
  } else {
    write_text_file(dir / "patients.csv", export_patients_csv(cohort));
    write_text_file(dir / "objects.csv", export_objects_csv(cohort));
  }
}

}  // namespace parasitometrics
