// Binary checkpoint of an in-flight experiment.
//
// Layout: 8-byte magic "H3NLSCKP", u32 version, u32 byte-order mark,
// u64 payload length, u64 FNV-1a checksum of the payload, payload. All
// numbers are stored in host byte order; the mark rejects foreign files.

#include <cstring>
#include <fstream>
#include <iterator>

#include "h3nls/lab.hpp"

namespace h3nls {

namespace {

constexpr char kMagic[8] = {'H', '3', 'N', 'L', 'S', 'C', 'K', 'P'};
constexpr std::uint32_t kByteOrderMark = 0x01020304u;
constexpr std::size_t kHeaderSize = 8 + 4 + 4 + 8 + 8;

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

class Writer {
 public:
  template <class T>
  void put(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const char*>(&value);
    buf_.append(p, sizeof(T));
  }
  void put_string(const std::string& s) {
    put<std::uint64_t>(s.size());
    buf_.append(s);
  }
  void put_field(const RadialField& f) {
    put<std::uint64_t>(f.size());
    for (const auto z : f.values()) {
      put(z.real());
      put(z.imag());
    }
  }
  void put_doubles(const std::vector<double>& v) {
    put<std::uint64_t>(v.size());
    for (const double x : v) put(x);
  }
  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(const std::string& bytes) : buf_(bytes) {}

  template <class T>
  T get() {
    static_assert(std::is_trivially_copyable_v<T>);
    need(sizeof(T));
    T value;
    std::memcpy(&value, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::size_t count() {
    const auto n = get<std::uint64_t>();
    if (n > buf_.size()) fail(ErrorCode::corrupt, "checkpoint count out of range");
    return static_cast<std::size_t>(n);
  }
  std::string get_string() {
    const auto n = count();
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  RadialField get_field(const RadialGrid& grid) {
    const auto n = count();
    if (n != grid.size()) fail(ErrorCode::corrupt, "checkpoint field size mismatch");
    RadialField f(grid);
    for (std::size_t j = 0; j < n; ++j) {
      const double re = get<double>();
      const double im = get<double>();
      f[j] = Complex(re, im);
    }
    return f;
  }
  std::vector<double> get_doubles() {
    const auto n = count();
    std::vector<double> v(n);
    for (auto& x : v) x = get<double>();
    return v;
  }
  bool at_end() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) fail(ErrorCode::corrupt, "checkpoint truncated");
  }
  const std::string& buf_;
  std::size_t pos_ = 0;
};

void put_table(Writer& w, const StrichartzTable& t) {
  w.put<std::int32_t>(static_cast<std::int32_t>(t.field));
  w.put(t.sigma);
  w.put(t.surrogate);
  w.put<std::uint64_t>(t.rows.size());
  for (const auto& r : t.rows) {
    w.put(r.pair.p);
    w.put(r.pair.q);
    w.put(r.value);
    w.put<std::uint8_t>(r.admissible ? 1 : 0);
  }
}

StrichartzTable get_table(Reader& r) {
  StrichartzTable t;
  const auto field = r.get<std::int32_t>();
  if (field < 0 || field > static_cast<std::int32_t>(FieldSelector::zeta))
    fail(ErrorCode::corrupt, "checkpoint field selector out of range");
  t.field = static_cast<FieldSelector>(field);
  t.sigma = r.get<double>();
  t.surrogate = r.get<double>();
  const auto n = r.count();
  for (std::size_t i = 0; i < n; ++i) {
    StrichartzRow row{};
    row.pair.p = r.get<double>();
    row.pair.q = r.get<double>();
    row.value = r.get<double>();
    row.admissible = r.get<std::uint8_t>() != 0;
    t.rows.push_back(row);
  }
  return t;
}

}  // namespace

void save_checkpoint(const std::string& path, const Experiment& ex) {
  const auto& run = ex.run();
  const auto& state = run.state();
  const auto in = run.internals();
  const auto& ledger = run.ledger();
  const auto& history = run.history();

  Writer w;
  w.put_string(config_to_json(ex.config()).dump());

  w.put(state.t);
  w.put_field(state.psi);
  w.put_field(state.phi);
  w.put_field(state.v);
  w.put_field(state.u);

  w.put(in.step);
  w.put(in.budget);
  w.put(in.prev_u8);
  w.put(in.interval_start);
  w.put(in.interval_start_energy);
  w.put(in.max_reconstruction_error);
  w.put<std::uint64_t>(in.accumulators.size());
  for (const auto& a : in.accumulators) w.put_doubles(a);

  w.put(ledger.M_used);
  w.put(ledger.dE_total);
  w.put<std::uint64_t>(ledger.intervals.size());
  for (const auto& rec : ledger.intervals) {
    w.put<std::int32_t>(rec.index);
    for (const double x : {rec.b0, rec.b1, rec.budget, rec.last_increment, rec.dE, rec.term_I,
                           rec.term_II, rec.dE_flow, rec.E_phi_end})
      w.put(x);
    w.put<std::uint64_t>(rec.strichartz.size());
    for (const auto& t : rec.strichartz) put_table(w, t);
  }
  w.put<std::uint64_t>(ledger.energy_phi_trajectory.size());
  for (const auto& [t, e] : ledger.energy_phi_trajectory) {
    w.put(t);
    w.put(e);
  }

  w.put<std::uint64_t>(history.samples.size());
  for (const auto& s : history.samples)
    for (const double x :
         {s.t, s.mass_u, s.energy_u, s.energy_phi, s.l4_u, s.l4_zeta, s.shell_mass})
      w.put(x);
  w.put<std::uint64_t>(history.snapshots.size());
  for (const auto& snap : history.snapshots) {
    w.put(snap.t);
    w.put_field(snap.u);
    w.put_field(snap.psi);
    w.put_field(snap.phi);
  }
  w.put<std::uint64_t>(history.warnings.size());
  for (const auto& msg : history.warnings) w.put_string(msg);
  w.put<std::uint8_t>(history.shell_flagged ? 1 : 0);
  w.put<std::int32_t>(history.retain_every);

  const auto& payload = w.bytes();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::io, "cannot write checkpoint " + path);
  out.write(kMagic, sizeof kMagic);
  const std::uint32_t version = kCheckpointVersion;
  const std::uint32_t mark = kByteOrderMark;
  const std::uint64_t size = payload.size();
  const std::uint64_t sum = fnv1a(payload);
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  out.write(reinterpret_cast<const char*>(&mark), sizeof mark);
  out.write(reinterpret_cast<const char*>(&size), sizeof size);
  out.write(reinterpret_cast<const char*>(&sum), sizeof sum);
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) fail(ErrorCode::io, "checkpoint write failed for " + path);
}

Experiment load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot read checkpoint " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < kHeaderSize || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    fail(ErrorCode::corrupt, path + " is not a checkpoint file");
  std::uint32_t version = 0, mark = 0;
  std::uint64_t size = 0, sum = 0;
  std::memcpy(&version, bytes.data() + 8, 4);
  std::memcpy(&mark, bytes.data() + 12, 4);
  std::memcpy(&size, bytes.data() + 16, 8);
  std::memcpy(&sum, bytes.data() + 24, 8);
  if (version != kCheckpointVersion)
    fail(ErrorCode::version_mismatch, "checkpoint version " + std::to_string(version) +
                                          " is not supported (expected " +
                                          std::to_string(kCheckpointVersion) + ")");
  if (mark != kByteOrderMark) fail(ErrorCode::corrupt, "checkpoint byte order mismatch");
  if (bytes.size() - kHeaderSize != size) fail(ErrorCode::corrupt, "checkpoint length mismatch");
  const std::string payload = bytes.substr(kHeaderSize);
  if (fnv1a(payload) != sum) fail(ErrorCode::corrupt, "checkpoint checksum mismatch");

  Reader r(payload);
  RunConfig cfg;
  try {
    cfg = config_from_json(nlohmann::json::parse(r.get_string()));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::corrupt, std::string("checkpoint config unreadable: ") + e.what());
  }
  const auto grid = cfg.grid();

  Decomposition state{RadialField(grid), RadialField(grid), RadialField(grid),
                      RadialField(grid), 0.0};
  state.t = r.get<double>();
  state.psi = r.get_field(grid);
  state.phi = r.get_field(grid);
  state.v = r.get_field(grid);
  state.u = r.get_field(grid);

  HighLowRun::Internals internals;
  internals.step = r.get<std::int64_t>();
  internals.budget = r.get<double>();
  internals.prev_u8 = r.get<double>();
  internals.interval_start = r.get<double>();
  internals.interval_start_energy = r.get<double>();
  internals.max_reconstruction_error = r.get<double>();
  const auto n_acc = r.count();
  for (std::size_t i = 0; i < n_acc; ++i) internals.accumulators.push_back(r.get_doubles());

  Ledger ledger;
  ledger.params = cfg.highlow_params();
  ledger.R = cfg.R;
  ledger.N = cfg.N;
  ledger.dt = cfg.dt;
  ledger.M_used = r.get<double>();
  ledger.dE_total = r.get<double>();
  const auto n_int = r.count();
  for (std::size_t i = 0; i < n_int; ++i) {
    IntervalRecord rec;
    rec.index = r.get<std::int32_t>();
    for (double* x : {&rec.b0, &rec.b1, &rec.budget, &rec.last_increment, &rec.dE, &rec.term_I,
                      &rec.term_II, &rec.dE_flow, &rec.E_phi_end})
      *x = r.get<double>();
    const auto n_tab = r.count();
    for (std::size_t k = 0; k < n_tab; ++k) rec.strichartz.push_back(get_table(r));
    ledger.intervals.push_back(std::move(rec));
  }
  const auto n_traj = r.count();
  for (std::size_t i = 0; i < n_traj; ++i) {
    const double t = r.get<double>();
    const double e = r.get<double>();
    ledger.energy_phi_trajectory.emplace_back(t, e);
  }

  EvolutionHistory history;
  const auto n_samples = r.count();
  for (std::size_t i = 0; i < n_samples; ++i) {
    NormSample s;
    for (double* x : {&s.t, &s.mass_u, &s.energy_u, &s.energy_phi, &s.l4_u, &s.l4_zeta,
                      &s.shell_mass})
      *x = r.get<double>();
    history.samples.push_back(s);
  }
  const auto n_snap = r.count();
  for (std::size_t i = 0; i < n_snap; ++i) {
    const double t = r.get<double>();
    auto u = r.get_field(grid);
    auto psi = r.get_field(grid);
    auto phi = r.get_field(grid);
    history.snapshots.push_back({t, std::move(u), std::move(psi), std::move(phi)});
  }
  const auto n_warn = r.count();
  for (std::size_t i = 0; i < n_warn; ++i) history.warnings.push_back(r.get_string());
  history.shell_flagged = r.get<std::uint8_t>() != 0;
  history.retain_every = r.get<std::int32_t>();
  if (!r.at_end()) fail(ErrorCode::corrupt, "checkpoint has trailing bytes");

  auto run = HighLowRun::restore(std::move(state), cfg.highlow_params(), cfg.stepper_config(),
                                 std::move(ledger), std::move(history), internals);
  return Experiment(std::move(cfg), std::move(run));
}

}  // namespace h3nls
