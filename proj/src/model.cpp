#include "cfgdec/model.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <random>

#include "cfgdec/error.hpp"

namespace cfgdec {

OutputSet::OutputSet(const Grammar& g, int nonterminal) {
  for (int r : g.rules_for(nonterminal)) {
    for (const Symbol& s : g.rule(r).tail) {
      if (std::find(symbols_.begin(), symbols_.end(), s) == symbols_.end()) symbols_.push_back(s);
    }
  }
}

std::optional<int> OutputSet::index_of(const Symbol& s) const {
  auto it = std::find(symbols_.begin(), symbols_.end(), s);
  if (it == symbols_.end()) return std::nullopt;
  return static_cast<int>(it - symbols_.begin());
}

std::vector<int> EncoderVocab::context_ids(std::span<const int> terminals) const {
  std::vector<int> ids;
  ids.reserve(terminals.size());
  for (int t : terminals) ids.push_back(terminal_id(t));
  return ids;
}

CfgDecoderModel::CfgDecoderModel(const Grammar& g, Vocabulary source, ModelDims dims, std::uint64_t seed)
    : grammar_hash_(cfgdec::grammar_hash(g)), dims_(dims), vocab_(std::move(source), g.terminal_count()) {
  std::mt19937_64 rng(seed);
  for (std::size_t x = 0; x < g.nonterminal_count(); ++x) {
    outputs_.emplace_back(g, static_cast<int>(x));
    pairs_.emplace_back(static_cast<int>(x), static_cast<neural::Index>(vocab_.size()),
                        outputs_.back().size(), dims.embed_dim, dims.hidden_dim);
    neural::initialize(pairs_.back(), rng, dims.init_scale);
  }
}

void CfgDecoderModel::check_grammar(const Grammar& g) const {
  if (cfgdec::grammar_hash(g) != grammar_hash_) {
    throw ModelMismatchError("model was trained for a different grammar (hash mismatch)");
  }
}

namespace {

bool same_parameters(const Pair& a, const Pair& b) {
  auto& ma = const_cast<Pair&>(a);
  auto& mb = const_cast<Pair&>(b);
  auto va = ma.views();
  auto vb = mb.views();
  if (va.size() != vb.size()) return false;
  for (std::size_t i = 0; i < va.size(); ++i) {
    if (va[i].values.size() != vb[i].values.size()) return false;
    if (std::memcmp(va[i].values.data(), vb[i].values.data(), va[i].values.size() * sizeof(Real)) != 0) {
      return false;
    }
  }
  return true;
}

}  // namespace

bool operator==(const CfgDecoderModel& a, const CfgDecoderModel& b) {
  if (a.grammar_hash_ != b.grammar_hash_ || a.dims_.embed_dim != b.dims_.embed_dim ||
      a.dims_.hidden_dim != b.dims_.hidden_dim || !(a.vocab_.source() == b.vocab_.source()) ||
      a.pairs_.size() != b.pairs_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.pairs_.size(); ++i) {
    if (!same_parameters(a.pairs_[i], b.pairs_[i])) return false;
  }
  return true;
}

BaselineModel::BaselineModel(const Grammar& g, Vocabulary source, ModelDims dims, std::uint64_t seed)
    : grammar_hash_(cfgdec::grammar_hash(g)),
      dims_(dims),
      vocab_(std::move(source), g.terminal_count()),
      pair_(-1, static_cast<neural::Index>(vocab_.size()), static_cast<neural::Index>(g.terminal_count()) + 1,
            dims.embed_dim, dims.hidden_dim) {
  std::mt19937_64 rng(seed);
  neural::initialize(pair_, rng, dims.init_scale);
}

void BaselineModel::check_grammar(const Grammar& g) const {
  if (cfgdec::grammar_hash(g) != grammar_hash_) {
    throw ModelMismatchError("baseline was trained for a different grammar (hash mismatch)");
  }
}

bool operator==(const BaselineModel& a, const BaselineModel& b) {
  return a.grammar_hash_ == b.grammar_hash_ && a.dims_.embed_dim == b.dims_.embed_dim &&
         a.dims_.hidden_dim == b.dims_.hidden_dim && a.vocab_.source() == b.vocab_.source() &&
         same_parameters(a.pair_, b.pair_);
}

// ---------------------------------------------------------------------------
// Checkpoint I/O

namespace {

constexpr char kMagic[8] = {'C', 'F', 'G', 'D', 'E', 'C', '\0', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw CheckpointError("cannot open '" + path + "' for writing");
  }
  template <typename T>
  void put(T v) {
    v = to_little(v);
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void put_string(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void put_bytes(const char* data, std::size_t n) { out_.write(data, static_cast<std::streamsize>(n)); }
  void finish() {
    out_.flush();
    if (!out_) throw CheckpointError("write failed");
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw CheckpointError("cannot open checkpoint '" + path + "'");
  }
  template <typename T>
  T get() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in_) throw CheckpointError("truncated checkpoint '" + path_ + "'");
    return to_little(v);
  }
  std::string get_string() {
    auto n = get<std::uint32_t>();
    if (n > (1u << 20)) throw CheckpointError("corrupt checkpoint: oversized string");
    std::string s(n, '\0');
    in_.read(s.data(), n);
    if (!in_) throw CheckpointError("truncated checkpoint '" + path_ + "'");
    return s;
  }
  void get_bytes(char* data, std::size_t n) {
    in_.read(data, static_cast<std::streamsize>(n));
    if (!in_) throw CheckpointError("truncated checkpoint '" + path_ + "'");
  }
  bool at_eof() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::ifstream in_;
  std::string path_;
};

struct Header {
  ModelKind kind;
  std::uint64_t grammar_hash;
  ModelDims dims;
  Vocabulary source;
  std::uint32_t terminal_count;
};

void write_header(Writer& w, ModelKind kind, std::uint64_t hash, const ModelDims& dims,
                  const EncoderVocab& vocab, std::size_t terminal_count) {
  w.put_bytes(kMagic, sizeof(kMagic));
  w.put<std::uint32_t>(kFormatVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(kind));
  w.put<std::uint64_t>(hash);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(dims.embed_dim));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(dims.hidden_dim));
  const auto& tokens = vocab.source().tokens();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(tokens.size()));
  for (const auto& t : tokens) w.put_string(t);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(terminal_count));
}

Header read_header(Reader& r) {
  char magic[8];
  r.get_bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw CheckpointError("not a cfgdec checkpoint");
  auto version = r.get<std::uint32_t>();
  if (version != kFormatVersion) {
    throw CheckpointError("unsupported checkpoint format version " + std::to_string(version));
  }
  Header h;
  auto kind = r.get<std::uint32_t>();
  if (kind != 1 && kind != 2) throw CheckpointError("unknown model kind " + std::to_string(kind));
  h.kind = static_cast<ModelKind>(kind);
  h.grammar_hash = r.get<std::uint64_t>();
  h.dims.embed_dim = static_cast<int>(r.get<std::uint32_t>());
  h.dims.hidden_dim = static_cast<int>(r.get<std::uint32_t>());
  auto vocab_size = r.get<std::uint32_t>();
  std::vector<std::string> tokens;
  for (std::uint32_t i = 0; i < vocab_size; ++i) tokens.push_back(r.get_string());
  if (tokens.size() < static_cast<std::size_t>(reserved::kCount)) throw CheckpointError("corrupt vocabulary");
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (h.source.add(tokens[i]) != static_cast<int>(i)) throw CheckpointError("corrupt vocabulary");
  }
  h.terminal_count = r.get<std::uint32_t>();
  return h;
}

void write_tensors(Writer& w, std::vector<neural::TensorView<Real>> views, const std::vector<std::pair<std::int64_t, std::int64_t>>& shapes) {
  for (std::size_t i = 0; i < views.size(); ++i) {
    w.put_string(views[i].name);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(shapes[i].first));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(shapes[i].second));
    for (Real v : views[i].values) w.put<double>(v);
  }
}

std::vector<std::pair<std::int64_t, std::int64_t>> shapes_of(const Pair& p) {
  return {
      {p.encoder.embedding.rows(), p.encoder.embedding.cols()},
      {p.encoder.lstm.weights.rows(), p.encoder.lstm.weights.cols()},
      {p.encoder.lstm.bias.rows(), 1},
      {p.decoder.embedding.rows(), p.decoder.embedding.cols()},
      {p.decoder.lstm.weights.rows(), p.decoder.lstm.weights.cols()},
      {p.decoder.lstm.bias.rows(), 1},
      {p.decoder.projection.rows(), p.decoder.projection.cols()},
      {p.decoder.projection_bias.rows(), 1},
  };
}

std::vector<neural::TensorView<Real>> named_views(Pair& p, const std::string& owner) {
  auto views = p.views();
  for (auto& v : views) v.name = owner + "." + v.name;
  return views;
}

void read_tensors(Reader& r, Pair& p, const std::string& owner) {
  auto views = named_views(p, owner);
  auto shapes = shapes_of(p);
  for (std::size_t i = 0; i < views.size(); ++i) {
    std::string name = r.get_string();
    auto rows = r.get<std::uint32_t>();
    auto cols = r.get<std::uint32_t>();
    if (name != views[i].name || rows != shapes[i].first || cols != shapes[i].second) {
      throw CheckpointError("checkpoint tensor '" + name + "' does not match expected '" + views[i].name + "'");
    }
    for (Real& v : views[i].values) v = r.get<double>();
  }
}

void check_hash(const Header& h, const Grammar& g) {
  if (h.grammar_hash != grammar_hash(g)) {
    throw ModelMismatchError("checkpoint was trained for a different grammar (hash mismatch)");
  }
  if (h.terminal_count != g.terminal_count()) throw ModelMismatchError("checkpoint terminal count mismatch");
}

}  // namespace

class CheckpointAccess {
 public:
  static void save(const CfgDecoderModel& m, const std::string& path) {
    Writer w(path);
    write_header(w, ModelKind::kCfgDecoder, m.grammar_hash_, m.dims_, m.vocab_,
                 m.vocab_.size() - m.vocab_.source().size());
    w.put<std::uint32_t>(static_cast<std::uint32_t>(m.pairs_.size()));
    for (std::size_t x = 0; x < m.pairs_.size(); ++x) {
      Pair& p = const_cast<Pair&>(m.pairs_[x]);
      write_tensors(w, named_views(p, "nt" + std::to_string(x)), shapes_of(p));
    }
    w.finish();
  }

  static void save(const BaselineModel& m, const std::string& path) {
    Writer w(path);
    write_header(w, ModelKind::kBaseline, m.grammar_hash_, m.dims_, m.vocab_,
                 m.vocab_.size() - m.vocab_.source().size());
    w.put<std::uint32_t>(1);
    Pair& p = const_cast<Pair&>(m.pair_);
    write_tensors(w, named_views(p, "baseline"), shapes_of(p));
    w.finish();
  }

  static CfgDecoderModel load_cfg(const std::string& path, const Grammar& g) {
    Reader r(path);
    Header h = read_header(r);
    if (h.kind != ModelKind::kCfgDecoder) throw CheckpointError("checkpoint holds a baseline model");
    check_hash(h, g);
    CfgDecoderModel m(g, h.source, h.dims, 0);
    auto count = r.get<std::uint32_t>();
    if (count != m.pairs_.size()) throw ModelMismatchError("checkpoint nonterminal count mismatch");
    for (std::size_t x = 0; x < m.pairs_.size(); ++x) read_tensors(r, m.pairs_[x], "nt" + std::to_string(x));
    if (!r.at_eof()) throw CheckpointError("trailing bytes in checkpoint");
    return m;
  }

  static BaselineModel load_baseline(const std::string& path, const Grammar& g) {
    Reader r(path);
    Header h = read_header(r);
    if (h.kind != ModelKind::kBaseline) throw CheckpointError("checkpoint holds a CFG-decoder model");
    check_hash(h, g);
    BaselineModel m(g, h.source, h.dims, 0);
    if (r.get<std::uint32_t>() != 1) throw CheckpointError("corrupt baseline checkpoint");
    read_tensors(r, m.pair_, "baseline");
    if (!r.at_eof()) throw CheckpointError("trailing bytes in checkpoint");
    return m;
  }
};

void save_checkpoint(const CfgDecoderModel& model, const std::string& path) { CheckpointAccess::save(model, path); }
void save_checkpoint(const BaselineModel& model, const std::string& path) { CheckpointAccess::save(model, path); }

ModelKind checkpoint_kind(const std::string& path) {
  Reader r(path);
  return read_header(r).kind;
}

CfgDecoderModel load_cfg_checkpoint(const std::string& path, const Grammar& g) {
  return CheckpointAccess::load_cfg(path, g);
}

BaselineModel load_baseline_checkpoint(const std::string& path, const Grammar& g) {
  return CheckpointAccess::load_baseline(path, g);
}

}  // namespace cfgdec
