#include "trajrest/config.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "trajrest/degrade.hpp"

namespace trajrest {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename N>
N parse_num(const std::string& key, const std::string& v) {
  N out{};
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError("config: bad value for '" + key + "': '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config: bad boolean for '" + key + "': '" + v + "'");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (const auto& item : split_list(v)) out.push_back(parse_num<int>(key, item));
  if (out.empty()) throw ConfigError("config: '" + key + "' needs at least one value");
  return out;
}

std::string num(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::string join(const std::vector<int>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + std::to_string(xs[i]);
  return out;
}

std::string join(const std::vector<std::string>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + xs[i];
  return out;
}

void set_model_key(ModelConfig& m, int* frame_interval, const std::string& full, const std::string& key,
                   const std::string& v) {
  if (key == "mode") {
    try {
      m.mode = parse_model_mode(v);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  } else if (key == "patch_size") {
    m.patch_size = parse_num<int>(full, v);
  } else if (key == "embed_dim") {
    m.embed_dim = parse_num<int>(full, v);
  } else if (key == "layers") {
    m.layers = parse_num<int>(full, v);
  } else if (key == "heads") {
    m.heads = parse_num<int>(full, v);
  } else if (key == "frame_interval" && frame_interval) {
    *frame_interval = parse_num<int>(full, v);
    m.frame_count = *frame_interval + 1;
  } else if (key == "frame_count" && !frame_interval) {
    m.frame_count = parse_num<int>(full, v);
  } else if (key == "image_size") {
    m.image_size = parse_num<int>(full, v);
  } else if (key == "channels" && !frame_interval) {
    m.channels = parse_num<int>(full, v);
  } else if (key == "condition_dropout") {
    m.condition_dropout_prob = parse_num<double>(full, v);
  } else {
    throw ConfigError("config: unknown key '" + full + "'");
  }
}

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void set_config_value(ExperimentConfig& c, const std::string& section, const std::string& key,
                      const std::string& v) {
  const std::string full = section + "." + key;
  auto unknown = [&] { throw ConfigError("config: unknown key '" + full + "'"); };
  if (section == "experiment") {
    if (key == "name") {
      c.name = v;
    } else if (key == "seed") {
      c.seed = parse_num<std::uint64_t>(full, v);
    } else {
      unknown();
    }
  } else if (section == "dataset") {
    auto& d = c.dataset;
    if (key == "source") {
      d.source = v;
    } else if (key == "source_count") {
      d.source_count = parse_num<int>(full, v);
    } else if (key == "image_size") {
      d.image_size = parse_num<int>(full, v);
    } else if (key == "categories") {
      d.categories = v == "all" ? std::vector<std::string>{} : split_list(v);
      for (const auto& cat : d.categories) {
        if (!is_category(cat)) throw ConfigError("config: unknown category '" + cat + "'");
      }
    } else if (key == "per_category") {
      d.per_category = parse_num<int>(full, v);
    } else if (key == "manifest") {
      d.manifest = v;
    } else {
      unknown();
    }
  } else if (section == "model") {
    set_model_key(c.model, &c.frame_interval, full, key, v);
  } else if (section == "schedule") {
    auto& s = c.schedule;
    auto& o = s.optimizer;
    if (key == "resolutions") {
      s.resolutions = parse_int_list(full, v);
    } else if (key == "total_epochs") {
      s.total_epochs = parse_num<int>(full, v);
    } else if (key == "steps_per_epoch") {
      s.steps_per_epoch = parse_num<int>(full, v);
    } else if (key == "batch_size") {
      s.batch_size = parse_num<int>(full, v);
    } else if (key == "protocol") {
      if (v == "resize_crop") {
        s.protocol = StageProtocol::kResizeCrop;
      } else if (v == "down_up") {
        s.protocol = StageProtocol::kDownUp;
      } else {
        throw ConfigError("config: '" + full + "' must be resize_crop or down_up");
      }
    } else if (key == "allow_decreasing") {
      s.allow_decreasing = parse_bool(full, v);
    } else if (key == "lr") {
      o.base_lr = parse_num<double>(full, v);
    } else if (key == "weight_decay") {
      o.weight_decay = parse_num<double>(full, v);
    } else if (key == "epsilon") {
      o.epsilon = parse_num<double>(full, v);
    } else if (key == "warmup_steps") {
      o.warmup_steps = parse_num<std::int64_t>(full, v);
    } else if (key == "max_grad_norm") {
      o.max_grad_norm = parse_num<double>(full, v);
    } else if (key == "beta1") {
      o.beta1 = parse_num<double>(full, v);
    } else if (key == "beta2") {
      o.beta2 = parse_num<double>(full, v);
    } else {
      unknown();
    }
  } else if (section == "sampler") {
    if (key == "steps") {
      c.sampler.steps = parse_num<int>(full, v);
    } else if (key == "guidance_scale") {
      c.sampler.guidance_scale = parse_num<double>(full, v);
    } else if (key == "shift") {
      c.sampler.shift = parse_num<double>(full, v);
    } else {
      unknown();
    }
  } else if (section == "corrector") {
    auto& r = c.corrector;
    if (key == "enabled") {
      r.enabled = parse_bool(full, v);
    } else if (key == "resolutions") {
      r.resolutions = parse_int_list(full, v);
    } else if (key == "total_epochs") {
      r.total_epochs = parse_num<int>(full, v);
    } else if (key == "steps_per_epoch") {
      r.steps_per_epoch = parse_num<int>(full, v);
    } else if (key == "batch_size") {
      r.batch_size = parse_num<int>(full, v);
    } else if (key == "lr") {
      r.lr = parse_num<double>(full, v);
    } else if (key == "warmup_steps") {
      r.warmup_steps = parse_num<std::int64_t>(full, v);
    } else if (key == "split") {
      if (v != "train" && v != "disjoint") throw ConfigError("config: '" + full + "' must be train or disjoint");
      r.disjoint_split = v == "disjoint";
    } else if (key == "pairs") {
      r.pairs = parse_num<int>(full, v);
    } else {
      unknown();
    }
  } else if (section == "eval") {
    if (key == "per_category") {
      c.eval.per_category = parse_num<int>(full, v);
    } else if (key == "manifest") {
      c.eval.manifest = v;
    } else if (key == "resize_limit") {
      c.eval.resize_limit = parse_num<int>(full, v);
    } else {
      unknown();
    }
  } else if (section == "sweep") {
    if (key == "key") {
      c.sweep.key = v;
    } else if (key == "values") {
      c.sweep.values = split_list(v);
    } else {
      unknown();
    }
  } else {
    throw ConfigError("config: unknown section '" + section + "'");
  }
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  ExperimentConfig c;
  std::stringstream in(text);
  std::string line;
  std::string section;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(number) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      static const std::set<std::string> kSections = {"experiment", "dataset",   "model", "schedule",
                                                      "sampler",    "corrector", "eval",  "sweep"};
      if (!kSections.count(section)) throw ConfigError(where + "unknown section '" + section + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    if (section.empty()) throw ConfigError(where + "key outside any section");
    try {
      set_config_value(c, section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  if (!c.sweep.key.empty()) {
    const auto dot = c.sweep.key.find('.');
    if (dot == std::string::npos) throw ConfigError(origin + ": sweep.key must be section.key");
    if (c.sweep.values.empty()) throw ConfigError(origin + ": sweep.values is empty");
    for (const auto& v : c.sweep.values) {
      ExperimentConfig probe = c;
      set_config_value(probe, c.sweep.key.substr(0, dot), c.sweep.key.substr(dot + 1), v);
    }
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

void validate(const ExperimentConfig& c) {
  try {
    ModelConfig m = c.model;
    m.frame_count = c.frame_interval + 1;
    m.validate();
    if (c.frame_interval < 1) throw ConfigError("model.frame_interval must be >= 1");
    build_schedule(c.schedule.resolutions, c.schedule.total_epochs, c.schedule.allow_decreasing);
    if (c.corrector.enabled) build_schedule(c.corrector.resolutions, c.corrector.total_epochs, false);
    c.sampler.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (c.schedule.steps_per_epoch < 1 || c.schedule.batch_size < 1) {
    throw ConfigError("config: schedule.steps_per_epoch and batch_size must be >= 1");
  }
  if (c.dataset.per_category < 0 || c.eval.per_category < 0) throw ConfigError("config: per_category must be >= 0");
  if (c.dataset.image_size < 1 || c.dataset.source_count < 0) throw ConfigError("config: bad dataset sizes");
  if (c.eval.resize_limit < 1) throw ConfigError("config: eval.resize_limit must be >= 1");
}

std::string canonical_text(const ExperimentConfig& c) {
  std::ostringstream o;
  const auto& s = c.schedule;
  const auto& r = c.corrector;
  o << "[experiment]\nname = " << c.name << "\nseed = " << c.seed << "\n";
  o << "[dataset]\nsource = " << c.dataset.source << "\nsource_count = " << c.dataset.source_count
    << "\nimage_size = " << c.dataset.image_size
    << "\ncategories = " << (c.dataset.categories.empty() ? "all" : join(c.dataset.categories))
    << "\nper_category = " << c.dataset.per_category << "\n";
  if (!c.dataset.manifest.empty()) o << "manifest = " << c.dataset.manifest << "\n";
  o << "[model]\nmode = " << to_string(c.model.mode) << "\npatch_size = " << c.model.patch_size
    << "\nembed_dim = " << c.model.embed_dim << "\nlayers = " << c.model.layers << "\nheads = " << c.model.heads
    << "\nframe_interval = " << c.frame_interval << "\nimage_size = " << c.model.image_size
    << "\ncondition_dropout = " << num(c.model.condition_dropout_prob) << "\n";
  o << "[schedule]\nresolutions = " << join(s.resolutions) << "\ntotal_epochs = " << s.total_epochs
    << "\nsteps_per_epoch = " << s.steps_per_epoch << "\nbatch_size = " << s.batch_size
    << "\nprotocol = " << (s.protocol == StageProtocol::kResizeCrop ? "resize_crop" : "down_up")
    << "\nallow_decreasing = " << (s.allow_decreasing ? "true" : "false") << "\nlr = " << num(s.optimizer.base_lr)
    << "\nweight_decay = " << num(s.optimizer.weight_decay) << "\nepsilon = " << num(s.optimizer.epsilon)
    << "\nwarmup_steps = " << s.optimizer.warmup_steps << "\nmax_grad_norm = " << num(s.optimizer.max_grad_norm)
    << "\nbeta1 = " << num(s.optimizer.beta1) << "\nbeta2 = " << num(s.optimizer.beta2) << "\n";
  o << "[sampler]\nsteps = " << c.sampler.steps << "\nguidance_scale = " << num(c.sampler.guidance_scale)
    << "\nshift = " << num(c.sampler.shift) << "\n";
  o << "[corrector]\nenabled = " << (r.enabled ? "true" : "false") << "\nresolutions = " << join(r.resolutions)
    << "\ntotal_epochs = " << r.total_epochs << "\nsteps_per_epoch = " << r.steps_per_epoch
    << "\nbatch_size = " << r.batch_size << "\nlr = " << num(r.lr) << "\nwarmup_steps = " << r.warmup_steps
    << "\nsplit = " << (r.disjoint_split ? "disjoint" : "train") << "\npairs = " << r.pairs << "\n";
  o << "[eval]\nper_category = " << c.eval.per_category << "\nresize_limit = " << c.eval.resize_limit << "\n";
  if (!c.eval.manifest.empty()) o << "manifest = " << c.eval.manifest << "\n";
  if (!c.sweep.key.empty()) o << "[sweep]\nkey = " << c.sweep.key << "\nvalues = " << join(c.sweep.values) << "\n";
  return o.str();
}

std::string model_config_text(const ModelConfig& m) {
  std::ostringstream o;
  o << "mode=" << to_string(m.mode) << "\npatch_size=" << m.patch_size << "\nembed_dim=" << m.embed_dim
    << "\nlayers=" << m.layers << "\nheads=" << m.heads << "\nframe_count=" << m.frame_count
    << "\nimage_size=" << m.image_size << "\nchannels=" << m.channels
    << "\ncondition_dropout=" << num(m.condition_dropout_prob) << "\n";
  return o.str();
}

ModelConfig parse_model_config_text(const std::string& text) {
  ModelConfig m;
  std::stringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("model config: malformed line '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    set_model_key(m, nullptr, "model." + key, key, trim(line.substr(eq + 1)));
  }
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return m;
}

TrainRunConfig base_run_config(const ExperimentConfig& c, int threads) {
  TrainRunConfig r;
  r.schedule = build_schedule(c.schedule.resolutions, c.schedule.total_epochs, c.schedule.allow_decreasing);
  r.frame_interval = c.frame_interval;
  r.model = c.model;
  r.model.frame_count = c.frame_interval + 1;
  r.optimizer = c.schedule.optimizer;
  r.seed = derive_seed(c.seed, 0xba5e);
  r.batch_size = c.schedule.batch_size;
  r.steps_per_epoch = c.schedule.steps_per_epoch;
  r.threads = threads;
  r.protocol = c.schedule.protocol;
  return r;
}

TrainRunConfig corrector_run_config(const ExperimentConfig& c, int threads) {
  TrainRunConfig r = base_run_config(c, threads);
  r.schedule = build_schedule(c.corrector.resolutions, c.corrector.total_epochs, false);
  r.steps_per_epoch = c.corrector.steps_per_epoch;
  r.batch_size = c.corrector.batch_size;
  r.optimizer.base_lr = c.corrector.lr;
  r.optimizer.warmup_steps = c.corrector.warmup_steps;
  r.seed = derive_seed(c.seed, 0xc0);
  r.frame_interval = kDriftIntervals;
  r.clip_kind = ClipKind::kDrift;
  return r;
}

}  // namespace trajrest
