#include "cardiac/dataio.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace cardiac {

using nlohmann::json;

namespace {

const std::map<int, std::string>& label_legend() {
  static const std::map<int, std::string> legend = {
      {0, "BG"}, {1, "RVC"}, {2, "LVM"}, {3, "LVC"}};
  return legend;
}

std::vector<unsigned char> read_binary(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

void write_binary(const fs::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

void put_f32_le(std::vector<unsigned char>& out, double value) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(value));
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<unsigned char>(bits >> (8 * b)));
}

float get_f32_le(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(p[b]) << (8 * b);
  return std::bit_cast<float>(bits);
}

struct RawVolume {
  SimpleVolumeHeader header;
  std::vector<unsigned char> payload;
};

RawVolume read_raw_volume(const fs::path& path) {
  RawVolume raw;
  raw.header = header_from_json(read_text_file(path));
  raw.payload = read_binary(payload_path(path));
  const std::size_t expected = raw.header.element_count() * raw.header.element_size();
  if (raw.payload.size() < expected) {
    throw IoError("truncated payload: " + payload_path(path).string() + " has " +
                  std::to_string(raw.payload.size()) + " bytes, expected " +
                  std::to_string(expected));
  }
  if (raw.payload.size() > expected) {
    throw IoError("payload size mismatch: " + payload_path(path).string());
  }
  return raw;
}

void write_raw_volume(const fs::path& path, const SimpleVolumeHeader& header,
                      const std::vector<unsigned char>& payload) {
  header.validate();
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_text_file(path, header_to_json(header));
  write_binary(payload_path(path), payload);
}

Spacing spacing_of(const SimpleVolumeHeader& h) {
  return Spacing{h.spacing_mm[0], h.spacing_mm[1], h.spacing_mm[2]};
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool is_nifti_name(const fs::path& p) {
  const std::string name = p.filename().string();
  return ends_with(name, ".nii") || ends_with(name, ".nii.gz");
}

std::uint8_t label_code_from(double v) {
  if (!(v >= 0.0 && v <= 3.0) || v != std::floor(v)) {
    throw ValidationError("label code outside {0..3}: " + std::to_string(v));
  }
  return static_cast<std::uint8_t>(v);
}

std::vector<LabelVolume> frames_from_nifti(const NiftiVolume& nv) {
  const Dims dims{nv.dims[0], nv.dims[1], nv.dims[2]};
  std::vector<LabelVolume> frames;
  const std::size_t n = dims.voxels();
  for (int t = 0; t < nv.dims[3]; ++t) {
    std::vector<std::uint8_t> data(n);
    for (std::size_t i = 0; i < n; ++i) data[i] = label_code_from(nv.values[t * n + i]);
    frames.emplace_back(dims, nv.spacing, std::move(data));
  }
  return frames;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& cell, const std::string& context) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || cell.empty()) {
    throw ValidationError("non-numeric cell '" + cell + "' in " + context);
  }
  return value;
}

std::string format_g9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// ---- model JSON ----

json dense_to_json(const DenseLayer& d) {
  return json{{"inputs", d.inputs}, {"outputs", d.outputs}, {"weights", d.weights}, {"bias", d.bias}};
}

template <typename T>
T require(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ValidationError("model JSON missing \"" + std::string(key) + "\" in " + where);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError("model JSON field \"" + std::string(key) + "\" in " + where + ": " + e.what());
  }
}

DenseLayer dense_from_json(const json& j, const std::string& where) {
  DenseLayer d;
  d.inputs = require<int>(j, "inputs", where);
  d.outputs = require<int>(j, "outputs", where);
  d.weights = require<std::vector<double>>(j, "weights", where);
  d.bias = require<std::vector<double>>(j, "bias", where);
  return d;
}

json mlp_to_json(const MlpModel& m) {
  json layers = json::array();
  for (std::size_t l = 0; l < m.hidden.size(); ++l) {
    const auto& bn = m.norms[l];
    layers.push_back(json{{"dense", dense_to_json(m.hidden[l])},
                          {"batch_norm",
                           {{"gamma", bn.gamma},
                            {"beta", bn.beta},
                            {"running_mean", bn.running_mean},
                            {"running_var", bn.running_var}}}});
  }
  return json{{"feature_mask", m.feature_mask},
              {"feature_means", m.feature_means},
              {"feature_stds", m.feature_stds},
              {"noise_sigma", m.noise_sigma},
              {"hidden", layers},
              {"output", dense_to_json(m.output)}};
}

MlpModel mlp_from_json(const json& j, const std::string& where) {
  MlpModel m;
  m.feature_mask = require<std::vector<std::size_t>>(j, "feature_mask", where);
  m.feature_means = require<std::vector<double>>(j, "feature_means", where);
  m.feature_stds = require<std::vector<double>>(j, "feature_stds", where);
  m.noise_sigma = require<double>(j, "noise_sigma", where);
  const json layers = require<json>(j, "hidden", where);
  for (const auto& layer : layers) {
    m.hidden.push_back(dense_from_json(require<json>(layer, "dense", where), where));
    const json bn = require<json>(layer, "batch_norm", where);
    BatchNormLayer norm;
    norm.gamma = require<std::vector<double>>(bn, "gamma", where);
    norm.beta = require<std::vector<double>>(bn, "beta", where);
    norm.running_mean = require<std::vector<double>>(bn, "running_mean", where);
    norm.running_var = require<std::vector<double>>(bn, "running_var", where);
    m.norms.push_back(std::move(norm));
  }
  m.output = dense_from_json(require<json>(j, "output", where), where);
  return m;
}

json tree_to_json(const DecisionTree& tree) {
  std::vector<int> feature, left, right;
  std::vector<double> threshold;
  std::vector<std::array<double, kNumClasses>> counts;
  for (const auto& n : tree.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    counts.push_back(n.counts);
  }
  return json{{"feature", feature}, {"threshold", threshold}, {"left", left},
              {"right", right}, {"counts", counts}};
}

DecisionTree tree_from_json(const json& j, const std::string& where) {
  const auto feature = require<std::vector<int>>(j, "feature", where);
  const auto threshold = require<std::vector<double>>(j, "threshold", where);
  const auto left = require<std::vector<int>>(j, "left", where);
  const auto right = require<std::vector<int>>(j, "right", where);
  const auto counts = require<std::vector<std::array<double, kNumClasses>>>(j, "counts", where);
  const std::size_t n = feature.size();
  if (threshold.size() != n || left.size() != n || right.size() != n || counts.size() != n) {
    throw ValidationError("tree arrays differ in length in " + where);
  }
  DecisionTree tree;
  tree.nodes.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    tree.nodes[i] = TreeNode{feature[i], threshold[i], left[i], right[i], counts[i]};
  }
  return tree;
}

}  // namespace

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

// ---- simple volume format ----

std::size_t SimpleVolumeHeader::element_count() const {
  std::size_t n = 1;
  for (int d : dims) n *= static_cast<std::size_t>(d);
  return n;
}

std::size_t SimpleVolumeHeader::element_size() const { return dtype == "f32" ? 4 : 1; }

void SimpleVolumeHeader::validate() const {
  for (int d : dims) {
    if (d <= 0) throw IoError("malformed header: dims must be positive");
  }
  if (dtype != "u8" && dtype != "f32") throw IoError("malformed header: dtype must be u8 or f32");
  for (double s : spacing_mm) {
    if (!(std::isfinite(s) && s > 0.0)) throw ValidationError("non-positive spacing");
  }
}

std::string header_to_json(const SimpleVolumeHeader& header) {
  json legend = json::object();
  for (const auto& [code, name] : header.legend) legend[std::to_string(code)] = name;
  json j{{"dims", header.dims},
         {"spacing_mm", header.spacing_mm},
         {"dtype", header.dtype},
         {"legend", legend}};
  return j.dump(2) + "\n";
}

SimpleVolumeHeader header_from_json(const std::string& text) {
  SimpleVolumeHeader h;
  try {
    const json j = json::parse(text);
    h.dims = j.at("dims").get<std::array<int, 4>>();
    h.spacing_mm = j.at("spacing_mm").get<std::array<double, 3>>();
    h.dtype = j.at("dtype").get<std::string>();
    if (j.contains("legend")) {
      for (const auto& [key, value] : j.at("legend").items()) {
        h.legend[std::stoi(key)] = value.get<std::string>();
      }
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed header: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw IoError("malformed header: legend keys must be integers");
  }
  h.validate();
  return h;
}

fs::path payload_path(const fs::path& header_path) {
  fs::path p = header_path;
  p.replace_extension(".raw");
  return p;
}

void write_series(const CineLabelSeries& series, const fs::path& path) {
  SimpleVolumeHeader h;
  const Dims d = series.dims();
  h.dims = {d.nx, d.ny, d.nz, static_cast<int>(series.size())};
  h.spacing_mm = {series.spacing().sx, series.spacing().sy, series.spacing().sz};
  h.dtype = "u8";
  h.legend = label_legend();
  std::vector<unsigned char> payload;
  payload.reserve(h.element_count());
  for (const auto& f : series.frames()) payload.insert(payload.end(), f.data().begin(), f.data().end());
  write_raw_volume(path, h, payload);
}

CineLabelSeries read_series(const fs::path& path) {
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(path)) {
      if (e.is_regular_file() && is_nifti_name(e.path())) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw IoError("no NIfTI frames in " + path.string());
    std::vector<LabelVolume> frames;
    for (const auto& f : files) {
      auto part = frames_from_nifti(read_nifti(f));
      for (auto& v : part) frames.push_back(std::move(v));
    }
    return CineLabelSeries(std::move(frames));
  }
  if (is_nifti_name(path)) return CineLabelSeries(frames_from_nifti(read_nifti(path)));

  const RawVolume raw = read_raw_volume(path);
  if (raw.header.dtype != "u8") throw IoError("label series must have dtype u8");
  const Dims dims{raw.header.dims[0], raw.header.dims[1], raw.header.dims[2]};
  const std::size_t n = dims.voxels();
  std::vector<LabelVolume> frames;
  for (int t = 0; t < raw.header.dims[3]; ++t) {
    std::vector<std::uint8_t> data(raw.payload.begin() + static_cast<std::ptrdiff_t>(t * n),
                                   raw.payload.begin() + static_cast<std::ptrdiff_t>((t + 1) * n));
    frames.emplace_back(dims, spacing_of(raw.header), std::move(data));
  }
  return CineLabelSeries(std::move(frames));
}

void write_probabilities(const ProbabilityVolume& volume, const fs::path& path) {
  SimpleVolumeHeader h;
  const Dims d = volume.dims();
  h.dims = {d.nx, d.ny, d.nz, kNumLabels};
  h.spacing_mm = {volume.spacing().sx, volume.spacing().sy, volume.spacing().sz};
  h.dtype = "f32";
  h.legend = label_legend();
  std::vector<unsigned char> payload;
  payload.reserve(h.element_count() * 4);
  const std::size_t n = d.voxels();
  for (int k = 0; k < kNumLabels; ++k) {
    for (std::size_t v = 0; v < n; ++v) put_f32_le(payload, volume.voxel(v)[k]);
  }
  write_raw_volume(path, h, payload);
}

ProbabilityVolume read_probabilities(const fs::path& path) {
  const RawVolume raw = read_raw_volume(path);
  if (raw.header.dtype != "f32" || raw.header.dims[3] != kNumLabels) {
    throw IoError("probability map must be f32 with 4 class channels");
  }
  const Dims dims{raw.header.dims[0], raw.header.dims[1], raw.header.dims[2]};
  const std::size_t n = dims.voxels();
  std::vector<double> data(n * kNumLabels);
  for (int k = 0; k < kNumLabels; ++k) {
    for (std::size_t v = 0; v < n; ++v) {
      data[v * kNumLabels + k] = get_f32_le(&raw.payload[(k * n + v) * 4]);
    }
  }
  return ProbabilityVolume(dims, spacing_of(raw.header), std::move(data));
}

void write_image(const ImageVolume& image, const fs::path& path) {
  SimpleVolumeHeader h;
  h.dims = {image.dims.nx, image.dims.ny, image.dims.nz, 1};
  h.spacing_mm = {image.spacing.sx, image.spacing.sy, image.spacing.sz};
  h.dtype = "f32";
  std::vector<unsigned char> payload;
  payload.reserve(image.data.size() * 4);
  for (double v : image.data) put_f32_le(payload, v);
  write_raw_volume(path, h, payload);
}

ImageVolume read_image(const fs::path& path) {
  const RawVolume raw = read_raw_volume(path);
  if (raw.header.dtype != "f32" || raw.header.dims[3] != 1) {
    throw IoError("image must be f32 with a single frame");
  }
  const Dims dims{raw.header.dims[0], raw.header.dims[1], raw.header.dims[2]};
  std::vector<double> data(dims.voxels());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = get_f32_le(&raw.payload[i * 4]);
  return ImageVolume(dims, spacing_of(raw.header), std::move(data));
}

// ---- patients ----

void write_patient(const PatientRecord& record, const fs::path& dir) {
  validate_patient(record);
  fs::create_directories(dir);
  json j{{"id", record.id},
         {"height_cm", record.height_cm},
         {"weight_kg", record.weight_kg},
         {"ed_index", record.ed_index},
         {"es_index", record.es_index},
         {"series", "series.json"}};
  if (record.diagnosis) j["diagnosis"] = std::string(diagnosis_name(*record.diagnosis));
  write_text_file(dir / "patient.json", j.dump(2) + "\n");
  write_series(record.series, dir / "series.json");
}

PatientRecord read_patient(const fs::path& dir) {
  PatientRecord r;
  std::string series_name;
  try {
    const json j = json::parse(read_text_file(dir / "patient.json"));
    r.id = j.at("id").get<std::string>();
    r.height_cm = j.at("height_cm").get<double>();
    r.weight_kg = j.at("weight_kg").get<double>();
    r.ed_index = j.at("ed_index").get<std::size_t>();
    r.es_index = j.at("es_index").get<std::size_t>();
    series_name = j.value("series", std::string("series.json"));
    if (j.contains("diagnosis") && !j.at("diagnosis").is_null()) {
      r.diagnosis = diagnosis_from_name(j.at("diagnosis").get<std::string>());
    }
  } catch (const json::exception& e) {
    throw IoError("malformed patient.json in " + dir.string() + ": " + e.what());
  }
  r.series = read_series(dir / series_name);
  validate_patient(r);
  return r;
}

std::vector<fs::path> list_patient_dirs(const fs::path& root) {
  if (!fs::is_directory(root)) throw IoError("not a directory: " + root.string());
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory() && fs::exists(e.path() / "patient.json")) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

// ---- CSV ----

void write_features_csv(const std::vector<FeatureVector>& vectors, const FeatureSchema& schema,
                        const fs::path& path) {
  std::string out = "patient_id";
  for (const auto& name : schema.names()) out += "," + name;
  out += "\n";
  for (const auto& v : vectors) {
    if (v.values.size() != schema.size()) {
      throw ValidationError("feature vector for '" + v.patient_id + "' does not match schema");
    }
    out += v.patient_id;
    for (double x : v.values) out += "," + format_g9(x);
    out += "\n";
  }
  write_text_file(path, out);
}

FeatureTable read_features_csv(const fs::path& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty feature CSV " + path.string());
  auto header = split_csv_line(line);
  const auto& schema = FeatureSchema::canonical();
  if (header.empty() || header.front() != "patient_id") {
    throw ValidationError("feature CSV must start with a patient_id column");
  }
  FeatureTable table;
  table.names.assign(header.begin() + 1, header.end());
  if (table.names.size() != schema.size()) {
    throw ValidationError("schema mismatch: expected " + std::to_string(schema.size()) +
                          " feature columns, found " + std::to_string(table.names.size()));
  }
  if (table.names != schema.names()) {
    throw ValidationError("schema mismatch: column names or order differ from canonical schema");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw ValidationError("row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                            " cells, expected " + std::to_string(header.size()));
    }
    FeatureVector v;
    v.patient_id = cells[0];
    for (std::size_t i = 1; i < cells.size(); ++i) {
      v.values.push_back(parse_double(cells[i], "row " + std::to_string(line_no)));
    }
    v.validate();
    table.vectors.push_back(std::move(v));
  }
  return table;
}

void write_labels_csv(const std::map<std::string, Diagnosis>& labels, const fs::path& path) {
  std::string out = "patient_id,diagnosis\n";
  for (const auto& [id, d] : labels) out += id + "," + std::string(diagnosis_name(d)) + "\n";
  write_text_file(path, out);
}

std::map<std::string, Diagnosis> read_labels_csv(const fs::path& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  std::getline(in, line);
  auto header = split_csv_line(line);
  if (header.size() != 2 || header[0] != "patient_id" || header[1] != "diagnosis") {
    throw ValidationError("labels CSV header must be patient_id,diagnosis");
  }
  std::map<std::string, Diagnosis> labels;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (cells.size() != 2) throw ValidationError("malformed labels row: " + line);
    labels[cells[0]] = diagnosis_from_name(cells[1]);
  }
  return labels;
}

Dataset make_dataset(const std::vector<FeatureVector>& vectors,
                     const std::map<std::string, Diagnosis>& labels) {
  Dataset data;
  for (const auto& v : vectors) {
    auto it = labels.find(v.patient_id);
    if (it == labels.end()) throw ValidationError("no label for patient '" + v.patient_id + "'");
    data.ids.push_back(v.patient_id);
    data.features.push_back(v.values);
    data.labels.push_back(it->second);
  }
  data.validate();
  return data;
}

// ---- model ----

std::string model_to_json(const EnsembleModel& model) {
  model.validate();
  json mlps = json::array();
  for (const auto& m : model.mlps) mlps.push_back(mlp_to_json(m));
  json trees = json::array();
  for (const auto& t : model.forest.trees) trees.push_back(tree_to_json(t));
  json j{{"version", kModelFormatVersion},
         {"schema_fingerprint", model.schema_fingerprint},
         {"class_order", model.class_order},
         {"mlp_weight", model.mlp_weight},
         {"mlps", mlps},
         {"forest", {{"trees", trees}}}};
  return j.dump() + "\n";
}

EnsembleModel model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed model JSON: ") + e.what());
  }
  const auto version = require<std::string>(j, "version", "model");
  if (version != kModelFormatVersion) {
    throw ValidationError("model version tag mismatch: '" + version + "', expected '" +
                          kModelFormatVersion + "'");
  }
  EnsembleModel model;
  model.schema_fingerprint = require<std::string>(j, "schema_fingerprint", "model");
  model.class_order = require<std::vector<std::string>>(j, "class_order", "model");
  model.mlp_weight = require<double>(j, "mlp_weight", "model");
  const json mlps = require<json>(j, "mlps", "model");
  for (std::size_t i = 0; i < mlps.size(); ++i) {
    model.mlps.push_back(mlp_from_json(mlps[i], "mlps[" + std::to_string(i) + "]"));
  }
  const json forest = require<json>(j, "forest", "model");
  const json trees = require<json>(forest, "trees", "forest");
  for (std::size_t i = 0; i < trees.size(); ++i) {
    model.forest.trees.push_back(tree_from_json(trees[i], "trees[" + std::to_string(i) + "]"));
  }
  model.validate();
  return model;
}

void save_model(const EnsembleModel& model, const fs::path& path) {
  write_text_file(path, model_to_json(model));
}

EnsembleModel load_model(const fs::path& path) { return model_from_json(read_text_file(path)); }

}  // namespace cardiac
