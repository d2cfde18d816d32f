#include "ndps/cli_io.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>

namespace ndps {

namespace {

std::uint32_t rd_u32(const std::string& s, std::size_t at) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(s[at])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + 1]))
             << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + 2]))
             << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + 3]))
             << 24;
}

std::uint16_t rd_u16(const std::string& s, std::size_t at) {
  return static_cast<std::uint16_t>(
      static_cast<unsigned char>(s[at]) |
      (static_cast<unsigned char>(s[at + 1]) << 8));
}

void wr_u32(std::ostream& os, std::uint32_t x) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((x >> (8 * i)) & 0xff);
  os.write(b, 4);
}

void wr_u16(std::ostream& os, std::uint16_t x) {
  char b[2] = {static_cast<char>(x & 0xff), static_cast<char>(x >> 8)};
  os.write(b, 2);
}

std::string trimmed(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(trimmed(line.substr(start)));
      return fields;
    }
    fields.push_back(trimmed(line.substr(start, tab - start)));
    start = tab + 1;
  }
}

int config_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const int x = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return x;
  } catch (const std::exception&) {
    throw FormatError("config key '" + key + "': '" + value +
                      "' is not an integer");
  }
}

double config_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return x;
  } catch (const std::exception&) {
    throw FormatError("config key '" + key + "': '" + value +
                      "' is not a number");
  }
}

std::uint64_t config_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const std::uint64_t x = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return x;
  } catch (const std::exception&) {
    throw FormatError("config key '" + key + "': '" + value +
                      "' is not an unsigned integer");
  }
}

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open '" + path + "'");
  std::string raw((std::istreambuf_iterator<char>(is)),
                  std::istreambuf_iterator<char>());
  if (raw.size() < 12 || raw.compare(0, 4, "RIFF") != 0 ||
      raw.compare(8, 4, "WAVE") != 0)
    throw FormatError("'" + path + "' is not a RIFF/WAVE file");

  bool have_fmt = false, have_data = false;
  std::size_t data_at = 0, data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= raw.size()) {
    const std::string id = raw.substr(pos, 4);
    const std::uint32_t len = rd_u32(raw, pos + 4);
    const std::size_t body = pos + 8;
    if (body + len > raw.size())
      throw FormatError("'" + path + "': truncated '" + id + "' chunk");
    if (id == "fmt ") {
      if (len < 16) throw FormatError("'" + path + "': fmt chunk too short");
      const std::uint16_t format = rd_u16(raw, body);
      if (format != 1)
        throw FormatError("'" + path + "': audio format " +
                          std::to_string(format) + ", expected PCM (1)");
      const std::uint16_t channels = rd_u16(raw, body + 2);
      if (channels != 1)
        throw FormatError("'" + path + "': " + std::to_string(channels) +
                          " channels, expected mono");
      const std::uint32_t rate = rd_u32(raw, body + 4);
      if (rate != static_cast<std::uint32_t>(kSampleRate))
        throw FormatError("'" + path + "': sample rate " +
                          std::to_string(rate) + ", expected 16000");
      const std::uint16_t bits = rd_u16(raw, body + 14);
      if (bits != 16)
        throw FormatError("'" + path + "': " + std::to_string(bits) +
                          " bits per sample, expected 16");
      have_fmt = true;
    } else if (id == "data") {
      data_at = body;
      data_len = len;
      have_data = true;
    }
    pos = body + len + (len & 1);  // chunks are word aligned
  }
  if (!have_fmt) throw FormatError("'" + path + "': missing fmt chunk");
  if (!have_data) throw FormatError("'" + path + "': missing data chunk");
  if (data_len % 2 != 0)
    throw FormatError("'" + path + "': odd PCM16 data length");

  Waveform w;
  w.samples.resize(data_len / 2);
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    const std::int16_t s =
        static_cast<std::int16_t>(rd_u16(raw, data_at + 2 * i));
    w.samples[i] = s / 32768.0;
  }
  return w;
}

void write_wav(const std::string& path, const std::vector<double>& samples) {
  for (double v : samples)
    if (!std::isfinite(v))
      throw NumericError("write_wav: samples must be finite");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open '" + path + "' for writing");

  const std::uint32_t data_len =
      static_cast<std::uint32_t>(samples.size() * 2);
  os.write("RIFF", 4);
  wr_u32(os, 36 + data_len);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  wr_u32(os, 16);
  wr_u16(os, 1);  // PCM
  wr_u16(os, 1);  // mono
  wr_u32(os, static_cast<std::uint32_t>(kSampleRate));
  wr_u32(os, static_cast<std::uint32_t>(kSampleRate) * 2);  // byte rate
  wr_u16(os, 2);   // block align
  wr_u16(os, 16);  // bits
  os.write("data", 4);
  wr_u32(os, data_len);
  for (double v : samples) {
    long code = std::lrint(v * 32768.0);
    if (code > 32767) code = 32767;
    if (code < -32768) code = -32768;
    wr_u16(os, static_cast<std::uint16_t>(static_cast<std::int16_t>(code)));
  }
  os.flush();
  if (!os) throw DataError("write failed for '" + path + "'");
}

DatasetManifest load_manifest(const std::string& path,
                              bool require_features) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open manifest '" + path + "'");
  const std::filesystem::path base =
      std::filesystem::path(path).parent_path();
  const auto resolve = [&base](const std::string& p) {
    const std::filesystem::path fp(p);
    return fp.is_absolute() ? p : (base / fp).string();
  };

  DatasetManifest manifest;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trimmed(line);
    if (t.empty() || t[0] == '#') continue;
    const std::vector<std::string> fields = split_tabs(t);
    const std::string where =
        "manifest '" + path + "' line " + std::to_string(lineno);

    if (fields.size() == 2 && fields[0] == "split") {
      if (!manifest.entries.empty())
        throw FormatError(where + ": split line must precede entries");
      if (fields[1] != "train" && fields[1] != "valid" &&
          fields[1] != "test")
        throw FormatError(where + ": split must be train, valid, or test");
      manifest.split = fields[1];
      continue;
    }
    if (fields.size() != 3)
      throw FormatError(where + ": expected id, audio path, feature path");
    if (fields[0].empty() || fields[1].empty() || fields[2].empty())
      throw FormatError(where + ": empty field");
    if (!seen.insert(fields[0]).second)
      throw FormatError(where + ": duplicate id '" + fields[0] + "'");

    ManifestEntry e;
    e.id = fields[0];
    e.audio_path = resolve(fields[1]);
    e.feature_path = resolve(fields[2]);
    if (!std::filesystem::exists(e.audio_path))
      throw DataError(where + ": audio file '" + e.audio_path +
                      "' does not exist");
    if (require_features && !std::filesystem::exists(e.feature_path))
      throw DataError(where + ": feature file '" + e.feature_path +
                      "' does not exist");
    manifest.entries.push_back(std::move(e));
  }
  return manifest;
}

FeaturePrepResult prepare_features(const DatasetManifest& manifest,
                                   std::ostream& log) {
  FeaturePrepResult result;
  if (manifest.entries.empty()) {
    log << "warning: empty manifest, nothing to do\n";
    return result;
  }
  for (const ManifestEntry& e : manifest.entries) {
    try {
      const Waveform w = read_wav(e.audio_path);
      const MelSpectrogram mel = mel_features(w.samples, w.sample_rate);
      write_feature_file(e.feature_path, mel);
      log << e.id << "\tframes=" << mel.frames << "\n";
      ++result.processed;
    } catch (const Error& err) {
      log << e.id << "\terror: " << err.what() << "\n";
      ++result.failed;
    }
  }
  return result;
}

std::vector<Utterance> load_utterances(const DatasetManifest& manifest) {
  if (manifest.entries.empty())
    throw DataError("manifest has no utterances");
  std::vector<Utterance> out;
  for (const ManifestEntry& e : manifest.entries) {
    Utterance u;
    u.mel = read_feature_file(e.feature_path);
    u.wave = read_wav(e.audio_path).samples;
    const std::size_t want =
        static_cast<std::size_t>(u.mel.frames) * kMelHop;
    // The mel frame count is ceil(T/80), so the tail padding is under one
    // hop; anything else means the feature file is stale.
    if (u.wave.size() > want || want - u.wave.size() >= kMelHop)
      throw DataError("utterance '" + e.id +
                      "': feature frames do not match the audio length");
    u.wave.resize(want, 0.0);
    out.push_back(std::move(u));
  }
  return out;
}

std::map<std::string, std::string> read_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open config '" + path + "'");
  std::map<std::string, std::string> config;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const std::string t = trimmed(line);
    if (t.empty()) continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw FormatError("config '" + path + "' line " +
                        std::to_string(lineno) + ": expected key=value");
    const std::string key = trimmed(t.substr(0, eq));
    const std::string value = trimmed(t.substr(eq + 1));
    if (key.empty())
      throw FormatError("config '" + path + "' line " +
                        std::to_string(lineno) + ": empty key");
    if (!config.emplace(key, value).second)
      throw FormatError("config '" + path + "' line " +
                        std::to_string(lineno) + ": duplicate key '" + key +
                        "'");
  }
  return config;
}

void apply_overrides(std::map<std::string, std::string>& config,
                     const std::vector<std::string>& overrides) {
  for (const std::string& s : overrides) {
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ArgumentError("override '" + s + "' must be key=value");
    config[trimmed(s.substr(0, eq))] = trimmed(s.substr(eq + 1));
  }
}

ToolkitConfig parse_toolkit_config(
    const std::map<std::string, std::string>& config) {
  static const std::set<std::string> known = {
      "model", "mode",   "bands",  "steps",  "batch", "clip_samples",
      "lr",    "decay",  "lambda", "warmup", "seed"};
  for (const auto& [key, value] : config) {
    (void)value;
    if (known.count(key) == 0)
      throw FormatError("unknown config key '" + key + "'");
  }
  const auto get = [&config](const std::string& key) {
    const auto it = config.find(key);
    return it == config.end() ? std::string() : it->second;
  };

  std::string model = get("model").empty() ? "toy" : get("model");
  if (model != "toy" && model != "paper")
    throw FormatError("config key 'model': expected toy or paper");
  std::string mode = get("mode").empty() ? "full_band" : get("mode");
  if (mode != "full_band" && mode != "multiband")
    throw FormatError("config key 'mode': expected full_band or multiband");
  const GeneratorMode gm = mode == "full_band" ? GeneratorMode::full_band
                                               : GeneratorMode::multiband;
  int bands = gm == GeneratorMode::multiband ? 4 : 1;
  if (!get("bands").empty()) bands = config_int("bands", get("bands"));

  ToolkitConfig tc;
  tc.gen = model == "toy" ? toy_config(gm, bands) : paper_config(gm, bands);
  tc.disc = model == "toy" ? toy_discriminator_config()
                           : paper_discriminator_config();
  if (!get("steps").empty())
    tc.train.total_steps = config_int("steps", get("steps"));
  if (!get("batch").empty())
    tc.train.batch = config_int("batch", get("batch"));
  if (!get("clip_samples").empty())
    tc.train.clip_samples = config_int("clip_samples", get("clip_samples"));
  if (!get("lr").empty()) tc.train.lr_init = config_double("lr", get("lr"));
  if (!get("decay").empty())
    tc.train.decay = config_double("decay", get("decay"));
  if (!get("lambda").empty())
    tc.train.lambda = config_double("lambda", get("lambda"));
  if (!get("warmup").empty())
    tc.train.warmup_steps = config_int("warmup", get("warmup"));
  if (!get("seed").empty()) tc.train.seed = config_u64("seed", get("seed"));

  validate_config(tc.gen);
  validate_config(tc.disc);
  validate_config(tc.train);
  return tc;
}

}  // namespace ndps
