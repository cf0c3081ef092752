#include "adaptex/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>

namespace adaptex {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "dumps are written in native little-endian order");

namespace {

using Magic = std::array<char, 16>;
constexpr Magic kValueMagic = {'\x89', 'A', 'D', 'A', 'P', 'T', 'E', 'X', '-', 'V', 'A', 'L', '\r', '\n', '\x1a', '\n'};
constexpr Magic kPolicyMagic = {'\x89', 'A', 'D', 'A', 'P', 'T', 'E', 'X', '-', 'P', 'O', 'L', '\r', '\n', '\x1a', '\n'};

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in, const fs::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw ArtifactError(path.string() + ": truncated");
  return v;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArtifactError("cannot write " + path.string());
  return out;
}

void write_prefix(std::ostream& out, const Magic& magic, const nlohmann::json& header) {
  out.write(magic.data(), magic.size());
  put(out, kFormatVersion);
  const std::string text = header.dump();
  put(out, static_cast<std::uint64_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

nlohmann::json read_prefix(std::istream& in, const Magic& magic, const fs::path& path) {
  Magic got{};
  if (!in.read(got.data(), got.size()) || got != magic) throw ArtifactError(path.string() + ": bad magic");
  const auto version = get<std::uint32_t>(in, path);
  if (version != kFormatVersion)
    throw ArtifactError(path.string() + ": unsupported format version " + std::to_string(version));
  const auto length = get<std::uint64_t>(in, path);
  if (length > (1u << 26)) throw ArtifactError(path.string() + ": header too large");
  std::string text(length, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(length))) throw ArtifactError(path.string() + ": truncated");
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactError(path.string() + ": corrupt header: " + e.what());
  }
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("missing artifact " + path.string());
  return in;
}

void finish(std::ostream& out, const fs::path& path) {
  out.flush();
  if (!out) throw ArtifactError("write failed: " + path.string());
}

std::string hex(const unsigned char* data, unsigned length) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  for (unsigned i = 0; i < length; ++i) {
    s += digits[data[i] >> 4];
    s += digits[data[i] & 15];
  }
  return s;
}

struct DigestDeleter {
  void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
};

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 init");
  }
  void update(const void* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) throw std::runtime_error("sha256 update");
  }
  std::string hex_digest() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), md, &len) != 1) throw std::runtime_error("sha256 final");
    return hex(md, len);
  }

 private:
  std::unique_ptr<EVP_MD_CTX, DigestDeleter> ctx_;
};

const char* kind_name(AxisKind k) {
  switch (k) {
    case AxisKind::space: return "space";
    case AxisKind::discrete: return "discrete";
    case AxisKind::belief: return "belief";
  }
  return "?";
}

std::string format_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void csv_double(std::ostream& out, double v) { out << format_g(v); }

}  // namespace

nlohmann::json grid_json(const Grid& grid, double time_step, double horizon) {
  nlohmann::json axes = nlohmann::json::array();
  for (const auto& a : grid.axes()) axes.push_back({{"name", a.name()}, {"kind", kind_name(a.kind())}, {"nodes", a.nodes()}});
  return {{"axes", axes}, {"time_step", time_step}, {"horizon", horizon}, {"nodes", grid.size()}};
}

std::string grid_signature(const nlohmann::json& grid, const nlohmann::json& config) {
  const std::string text = nlohmann::json{{"grid", grid}, {"config", config}}.dump();
  return sha256_hex(std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

std::string sha256_hex(std::span<const unsigned char> bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex_digest();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot read " + path.string());
  Sha256 h;
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex_digest();
}

void write_value_dump(const fs::path& path, const ValueField& field, const nlohmann::json& header) {
  nlohmann::json h = header;
  h["slices"] = field.slice_count();
  h["nodes"] = field.grid.size();
  h["time_step"] = field.time_step;
  h["horizon"] = field.horizon;
  auto out = open_out(path);
  write_prefix(out, kValueMagic, h);
  for (const auto& s : field.slices) out.write(reinterpret_cast<const char*>(s.data()), s.size() * sizeof(double));
  out.write(reinterpret_cast<const char*>(field.post_horizon.data()), field.post_horizon.size() * sizeof(double));
  finish(out, path);
}

ValueField read_value_dump(const fs::path& path, const Grid& grid, nlohmann::json* header) {
  auto in = open_in(path);
  const nlohmann::json h = read_prefix(in, kValueMagic, path);
  ValueField field;
  try {
    if (h.at("nodes").get<Eigen::Index>() != grid.size()) throw ArtifactError(path.string() + ": node count mismatch");
    field.grid = grid;
    field.time_step = h.at("time_step").get<double>();
    field.horizon = h.at("horizon").get<double>();
    const int n = h.at("slices").get<int>();
    if (n < 1) throw ArtifactError(path.string() + ": no slices");
    field.slices.assign(static_cast<std::size_t>(n), Eigen::ArrayXd(grid.size()));
    for (auto& s : field.slices)
      if (!in.read(reinterpret_cast<char*>(s.data()), s.size() * sizeof(double)))
        throw ArtifactError(path.string() + ": truncated payload");
    field.post_horizon.resize(grid.size());
    if (!in.read(reinterpret_cast<char*>(field.post_horizon.data()), grid.size() * sizeof(double)))
      throw ArtifactError(path.string() + ": truncated payload");
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactError(path.string() + ": corrupt header: " + e.what());
  }
  if (header) *header = h;
  return field;
}

void write_policy_dump(const fs::path& path, const PolicyGrid& policy, const nlohmann::json& header) {
  nlohmann::json h = header;
  h["slices"] = policy.slice_count();
  h["nodes"] = policy.grid.size();
  h["time_step"] = policy.time_step;
  h["horizon"] = policy.horizon;
  h["labels"] = policy.labels;
  auto out = open_out(path);
  write_prefix(out, kPolicyMagic, h);
  for (const auto& row : policy.actions)
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(std::int16_t)));
  finish(out, path);
}

PolicyGrid read_policy_dump(const fs::path& path, const Grid& grid, nlohmann::json* header) {
  auto in = open_in(path);
  const nlohmann::json h = read_prefix(in, kPolicyMagic, path);
  PolicyGrid policy;
  try {
    if (h.at("nodes").get<Eigen::Index>() != grid.size()) throw ArtifactError(path.string() + ": node count mismatch");
    policy.grid = grid;
    policy.time_step = h.at("time_step").get<double>();
    policy.horizon = h.at("horizon").get<double>();
    policy.labels = h.at("labels").get<std::vector<std::string>>();
    const int n = h.at("slices").get<int>();
    if (n < 1) throw ArtifactError(path.string() + ": no slices");
    policy.actions.assign(static_cast<std::size_t>(n), std::vector<std::int16_t>(static_cast<std::size_t>(grid.size())));
    for (auto& row : policy.actions)
      if (!in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(std::int16_t))))
        throw ArtifactError(path.string() + ": truncated payload");
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactError(path.string() + ": corrupt header: " + e.what());
  }
  for (const auto& row : policy.actions)
    for (auto a : row)
      if (a < kWait || a >= static_cast<int>(policy.labels.size())) throw ArtifactError(path.string() + ": action out of range");
  if (header) *header = h;
  return policy;
}

void write_policy_csv(const fs::path& path, const PolicyGrid& policy, long max_rows) {
  const Grid& grid = policy.grid;
  const long per_slice = static_cast<long>(grid.size());
  const int n = policy.slice_count();
  const long fit = std::max(1L, max_rows / std::max(1L, per_slice));
  const int stride = static_cast<int>(std::max(1L, (static_cast<long>(n) + fit - 1) / fit));
  std::ofstream out(path);
  if (!out) throw ArtifactError("cannot write " + path.string());
  out << "# adaptex policy v1 slice_stride=" << stride << "\n";
  out << "slice,t";
  for (const auto& a : grid.axes()) out << "," << a.name();
  out << ",node_class,action,label\n";
  for (int j = 0; j < n; j += stride) {
    const double t = j * policy.time_step;
    for (Eigen::Index node = 0; node < grid.size(); ++node) {
      out << j << ",";
      csv_double(out, t);
      const Point x = grid.coords(node);
      for (int k = 0; k < grid.dims(); ++k) {
        out << ",";
        csv_double(out, x[k]);
      }
      const NodeClass cls = grid.classify(node);
      const int a = policy.at(j, node);
      out << "," << (cls == NodeClass::interior ? "interior" : cls == NodeClass::boundary ? "boundary" : "absorbing") << ","
          << a << "," << (a < 0 ? "wait" : policy.labels[static_cast<std::size_t>(a)]) << "\n";
    }
  }
  finish(out, path);
}

void write_values_csv(const fs::path& path, const ValueField& field) {
  const Grid& grid = field.grid;
  std::ofstream out(path);
  if (!out) throw ArtifactError("cannot write " + path.string());
  out << "# adaptex values v1 t=0 log_w is the log of the factored cost\n";
  for (int k = 0; k < grid.dims(); ++k) out << (k ? "," : "") << grid.axis(k).name();
  out << ",log_w\n";
  const Eigen::ArrayXd& w = field.slices.front();
  for (Eigen::Index node = 0; node < grid.size(); ++node) {
    const Point x = grid.coords(node);
    for (int k = 0; k < grid.dims(); ++k) {
      if (k) out << ",";
      csv_double(out, x[k]);
    }
    out << ",";
    csv_double(out, w[node]);
    out << "\n";
  }
  finish(out, path);
}

void write_trajectory_csv(const fs::path& path, const Trajectory& traj, TrajectoryKind kind,
                          const std::vector<std::string>& labels) {
  struct Row {
    double t;
    int order;
    std::string event;
    const DecisionContext* ctx;
    int action;
    double true_u;
    double observation;
  };
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<Row> rows;
  for (std::size_t i = 0; i < traj.decisions.size(); ++i)
    rows.push_back({traj.decisions[i].t, 0, "decision", &traj.decisions[i], traj.decided[i], nan, nan});
  for (const auto& e : traj.events) {
    rows.push_back({e.tau, 1, "send", &e.pre, e.action, e.true_u, nan});
    const char* done = kind == TrajectoryKind::impact ? "trade" : e.executed ? "fill" : "expire";
    rows.push_back({e.theta, 2, done, &e.post, e.action, e.true_u, e.observation});
  }
  rows.push_back({traj.end_time, 3, "end", &traj.final_state, kWait, nan, nan});
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.t < b.t; });

  std::ofstream out(path);
  if (!out) throw ArtifactError("cannot write " + path.string());
  if (kind == TrajectoryKind::impact) {
    out << "# adaptex trajectory v1 impact terminal_log_cost=" << format_g(traj.terminal_log_cost) << "\n";
    out << "t,event,x1,x2,x3,x4,action,label,m,s,true_u,observation\n";
  } else {
    out << "# adaptex trajectory v1 limit terminal_log_cost=" << format_g(traj.terminal_log_cost) << "\n";
    out << "t,event,x2,x3,action,label,p,true_u,observation\n";
  }
  for (const Row& r : rows) {
    const DecisionContext& c = *r.ctx;
    const std::string label = r.action < 0 ? "wait" : labels.at(static_cast<std::size_t>(r.action));
    out << format_g(r.t) << "," << r.event << ",";
    if (kind == TrajectoryKind::impact)
      out << format_g(c.x1) << "," << format_g(c.x2) << "," << c.x3 << "," << format_g(c.x4) << "," << r.action << ","
          << label << "," << format_g(c.belief_mean) << "," << format_g(c.belief_std);
    else
      out << format_g(c.x2) << "," << c.x3 << "," << r.action << "," << label << "," << format_g(c.p);
    out << "," << (std::isnan(r.true_u) ? "" : format_g(r.true_u)) << ","
        << (std::isnan(r.observation) ? "" : format_g(r.observation)) << "\n";
  }
  finish(out, path);
}

StagedDirectory::StagedDirectory(fs::path target) : target_(std::move(target)) {
  const fs::path parent = target_.parent_path().empty() ? fs::path(".") : target_.parent_path();
  fs::create_directories(parent);
  std::random_device rd;
  for (int attempt = 0; attempt < 100; ++attempt) {
    fs::path candidate = parent / ("." + target_.filename().string() + ".staging-" + std::to_string(rd()));
    if (fs::create_directory(candidate)) {
      staging_ = std::move(candidate);
      return;
    }
  }
  throw ArtifactError("cannot create a staging directory next to " + target_.string());
}

StagedDirectory::~StagedDirectory() {
  if (done_) return;
  std::error_code ec;
  fs::remove_all(staging_, ec);
}

void StagedDirectory::commit() {
  if (fs::exists(target_)) fs::remove_all(target_);
  fs::rename(staging_, target_);
  done_ = true;
}

nlohmann::json file_inventory(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  nlohmann::json out = nlohmann::json::array();
  for (const auto& f : files)
    out.push_back({{"path", fs::relative(f, dir).generic_string()}, {"bytes", fs::file_size(f)}, {"sha256", sha256_file(f)}});
  return out;
}

void write_json(const fs::path& path, const nlohmann::json& value) {
  std::ofstream out(path);
  if (!out) throw ArtifactError("cannot write " + path.string());
  out << value.dump(2) << "\n";
  finish(out, path);
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ArtifactError("missing artifact " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactError(path.string() + ": " + e.what());
  }
}

}  // namespace adaptex
