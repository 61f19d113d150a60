// Copyright 2026 The pattrain Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pattrain/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "pattrain/error.hpp"
#include "pattrain/metrics.hpp"

namespace pattrain {

std::string to_string(Stage s) {
  switch (s) {
    case Stage::kWarmup:
      return "warmup";
    case Stage::kPatternGen:
      return "pattern-gen";
    case Stage::kFinalize:
      return "finalize";
    case Stage::kRegularize:
      return "regularize";
    case Stage::kMasked:
      return "masked";
  }
  return "unknown";
}

namespace {

constexpr char kMagic[8] = {'P', 'T', 'R', 'N', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u64(s.size());
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  void f64s(std::span<const double> v) {
    u64(v.size());
    for (double d : v) f64(d);
  }
  template <class T>
  void ints(std::span<const T> v) {
    u64(v.size());
    for (T x : v) le(static_cast<std::uint64_t>(static_cast<std::make_unsigned_t<T>>(x)), sizeof(T));
  }
  std::vector<std::uint8_t>& bytes() { return buf_; }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  Reader(std::span<const std::uint8_t> b, std::string where) : b_(b), where_(std::move(where)) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::size_t n = count(1);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::vector<double> f64s() {
    std::vector<double> v(count(8));
    for (double& d : v) d = f64();
    return v;
  }
  template <class T>
  std::vector<T> ints() {
    std::vector<T> v(count(sizeof(T)));
    for (T& x : v) x = static_cast<T>(static_cast<std::make_unsigned_t<T>>(le(sizeof(T))));
    return v;
  }
  bool done() const { return pos_ == b_.size(); }
  std::size_t pos() const { return pos_; }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = b_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::size_t count(std::size_t elem) {
    const std::uint64_t n = u64();
    if (n > (b_.size() - pos_) / elem) fail("array length exceeds section");
    return static_cast<std::size_t>(n);
  }
  void need(std::size_t n) {
    if (b_.size() - pos_ < n) fail("truncated");
  }
  std::uint64_t le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t{b_[pos_ + i]} << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("checkpoint section " + where_ + ": " + what);
  }
  std::span<const std::uint8_t> b_;
  std::string where_;
  std::size_t pos_ = 0;
};

void write_plan(Writer& w, const SparsityPlan& plan) {
  w.i32(plan.pool().capacity());
  w.str(plan.pool().to_json());
  w.u8(plan.frozen() ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(plan.size()));
  for (const LayerPlan& lp : plan.layers()) {
    w.u8(lp.planned ? 1 : 0);
    w.i32(lp.filters);
    w.i32(lp.channels);
    w.i32(lp.kernel_h);
    w.i32(lp.kernel_w);
    w.ints<std::int16_t>(lp.pattern_index);
  }
}

SparsityPlan read_plan(Reader& r) {
  const int capacity = r.i32();
  PatternPool pool = PatternPool::from_json(r.str(), capacity);
  const bool frozen = r.u8() != 0;
  std::vector<LayerPlan> layers(r.u32());
  for (LayerPlan& lp : layers) {
    lp.planned = r.u8() != 0;
    lp.filters = r.i32();
    lp.channels = r.i32();
    lp.kernel_h = r.i32();
    lp.kernel_w = r.i32();
    lp.pattern_index = r.ints<std::int16_t>();
  }
  SparsityPlan plan(std::move(pool), std::move(layers));
  if (frozen) plan.freeze();
  return plan;
}

void write_row(Writer& w, const MetricsRow& m) {
  w.i32(m.epoch);
  w.i32(m.stage);
  for (double d : {m.lr, m.train_loss, m.train_acc, m.test_acc, m.reg_loss, m.compression_ratio,
                   m.plan_compression, m.cum_train_flops, m.cum_dense_train_flops,
                   m.payload_ratio}) {
    w.f64(d);
  }
  w.u64(m.dense_bytes);
  w.u64(m.sparse_bytes);
  w.f64(m.dense_ring_bytes);
  w.f64(m.sparse_ring_bytes);
  w.u64(m.skipped_batches);
}

MetricsRow read_row(Reader& r) {
  MetricsRow m;
  m.epoch = r.i32();
  m.stage = r.i32();
  for (double* d : {&m.lr, &m.train_loss, &m.train_acc, &m.test_acc, &m.reg_loss,
                    &m.compression_ratio, &m.plan_compression, &m.cum_train_flops,
                    &m.cum_dense_train_flops, &m.payload_ratio}) {
    *d = r.f64();
  }
  m.dense_bytes = r.u64();
  m.sparse_bytes = r.u64();
  m.dense_ring_bytes = r.f64();
  m.sparse_ring_bytes = r.f64();
  m.skipped_batches = r.u64();
  return m;
}

void section(Writer& out, const char (&tag)[5], Writer& body) {
  for (int i = 0; i < 4; ++i) out.u8(static_cast<std::uint8_t>(tag[i]));
  out.u64(body.bytes().size());
  out.bytes().insert(out.bytes().end(), body.bytes().begin(), body.bytes().end());
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
  Writer out;
  for (char c : kMagic) out.u8(static_cast<std::uint8_t>(c));
  out.u32(kCheckpointVersion);

  Writer conf;
  conf.str(ckpt.config.canonical());
  conf.str(ckpt.config.out_dir);
  conf.u64(ckpt.config.hash());
  section(out, "CONF", conf);

  const Model& m = ckpt.model;
  Writer modl;
  modl.str(m.arch());
  modl.i32(m.sample_shape().d1);
  modl.i32(m.sample_shape().d2);
  modl.i32(m.sample_shape().d3);
  modl.i32(m.classes());
  modl.u32(static_cast<std::uint32_t>(m.conv_count()));
  for (std::size_t i = 0; i < m.conv_count(); ++i) {
    const LayerParams& p = m.conv(i);
    const Shape4& s = p.weights.shape();
    for (int d : {s.d0, s.d1, s.d2, s.d3, p.stride, p.padding}) modl.i32(d);
    modl.f64s(p.weights.data());
    modl.f64s(p.bias);
  }
  modl.u32(static_cast<std::uint32_t>(m.fc_count()));
  for (std::size_t i = 0; i < m.fc_count(); ++i) {
    const FcParams& p = m.fc(i);
    modl.i32(p.weights.rows());
    modl.i32(p.weights.cols());
    modl.f64s(p.weights.data());
    modl.f64s(p.bias);
  }
  section(out, "MODL", modl);

  const TrainState& st = ckpt.state;
  Writer stat;
  stat.i32(st.epochs_done);
  stat.u8(static_cast<std::uint8_t>(st.stage));
  stat.i32(st.stage_begin);
  stat.i32(st.history.window());
  stat.f64s(st.history.losses());
  stat.u8(st.prev_batch_loss ? 1 : 0);
  stat.f64(st.prev_batch_loss.value_or(0.0));
  stat.i32(st.hard_prune_epoch);
  stat.f64(st.cum_train_flops);
  stat.f64(st.cum_dense_train_flops);
  section(out, "STAT", stat);

  Writer cand;
  cand.u64(st.candidates.size());
  for (const auto& [p, score] : st.candidates.scores()) {
    cand.u16(p.mask());
    cand.i64(score);
  }
  section(out, "CAND", cand);

  Writer pool;
  pool.u8(st.pool ? 1 : 0);
  if (st.pool) {
    pool.i32(st.pool->capacity());
    pool.str(st.pool->to_json());
  }
  section(out, "POOL", pool);

  Writer occt;
  occt.u8(st.occurrence ? 1 : 0);
  if (st.occurrence) {
    const OccurrenceTable& t = *st.occurrence;
    occt.u64(t.pool_size());
    occt.u64(t.batches_counted());
    occt.u64(t.batches_skipped());
    occt.u32(static_cast<std::uint32_t>(t.raw().size()));
    for (const auto& layer : t.raw()) {
      occt.u8(layer.tracked ? 1 : 0);
      occt.i32(layer.channels);
      occt.ints<std::uint32_t>(layer.counts);
      occt.f64s(layer.importance);
    }
  }
  section(out, "OCCT", occt);

  Writer plan;
  plan.u8(st.plan ? 1 : 0);
  if (st.plan) write_plan(plan, *st.plan);
  section(out, "PLAN", plan);

  Writer indx;
  indx.u32(static_cast<std::uint32_t>(ckpt.indices.size()));
  for (const auto& idx : ckpt.indices) {
    indx.u8(idx ? 1 : 0);
    if (!idx) continue;
    indx.i32(idx->rows);
    indx.i32(idx->cols);
    indx.i32(idx->nnz_per_row);
    indx.ints<std::int32_t>(idx->row_ptr);
    indx.ints<std::int32_t>(idx->col_ind);
    indx.ints<std::int32_t>(idx->tile_offsets);
  }
  section(out, "INDX", indx);

  Writer metr;
  metr.u64(st.metrics.size());
  for (const MetricsRow& row : st.metrics) write_row(metr, row);
  section(out, "METR", metr);

  return std::move(out.bytes());
}

Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader top(bytes, "header");
  const auto magic = top.take(sizeof(kMagic));
  if (std::memcmp(magic.data(), kMagic, sizeof(kMagic)) != 0) {
    throw ParseError("checkpoint: bad magic");
  }
  const std::uint32_t version = top.u32();
  if (version != kCheckpointVersion) {
    throw ParseError("checkpoint: unsupported version " + std::to_string(version));
  }
  std::map<std::string, std::span<const std::uint8_t>> sections;
  while (!top.done()) {
    const auto tag = top.take(4);
    const std::string name(reinterpret_cast<const char*>(tag.data()), 4);
    const std::uint64_t len = top.u64();
    if (len > bytes.size() - top.pos()) throw ParseError("checkpoint: section " + name + " truncated");
    sections[name] = top.take(static_cast<std::size_t>(len));
  }
  auto open = [&](const std::string& name) {
    const auto it = sections.find(name);
    if (it == sections.end()) throw ParseError("checkpoint: missing section " + name);
    return Reader(it->second, name);
  };

  Checkpoint ck;
  {
    Reader r = open("CONF");
    ck.config = parse_config(r.str());
    ck.config.out_dir = r.str();
    if (r.u64() != ck.config.hash()) {
      throw IntegrityError("checkpoint: config hash does not match the stored config");
    }
  }
  {
    Reader r = open("MODL");
    const std::string arch = r.str();
    const int c = r.i32();
    const int h = r.i32();
    const int w = r.i32();
    const int classes = r.i32();
    ck.model = Model::build(arch, Shape4{1, c, h, w}, classes, 0);
    if (r.u32() != ck.model.conv_count()) throw ParseError("checkpoint: conv layer count");
    for (std::size_t i = 0; i < ck.model.conv_count(); ++i) {
      LayerParams& p = ck.model.conv(i);
      Shape4 s;
      s.d0 = r.i32();
      s.d1 = r.i32();
      s.d2 = r.i32();
      s.d3 = r.i32();
      const int stride = r.i32();
      const int padding = r.i32();
      if (s != p.weights.shape() || stride != p.stride || padding != p.padding) {
        throw ParseError("checkpoint: conv layer " + std::to_string(i) + " does not match arch");
      }
      p.weights = Tensor4(s, r.f64s());
      p.bias = r.f64s();
      p.validate();
    }
    if (r.u32() != ck.model.fc_count()) throw ParseError("checkpoint: fc layer count");
    for (std::size_t i = 0; i < ck.model.fc_count(); ++i) {
      FcParams& p = ck.model.fc(i);
      const int rows = r.i32();
      const int cols = r.i32();
      if (rows != p.weights.rows() || cols != p.weights.cols()) {
        throw ParseError("checkpoint: fc layer " + std::to_string(i) + " does not match arch");
      }
      p.weights = Matrix(rows, cols, r.f64s());
      p.bias = r.f64s();
      if (p.bias.size() != static_cast<std::size_t>(rows)) throw ParseError("checkpoint: fc bias");
    }
  }
  TrainState& st = ck.state;
  {
    Reader r = open("STAT");
    st.epochs_done = r.i32();
    const std::uint8_t stage = r.u8();
    if (stage < 1 || stage > 5) throw ParseError("checkpoint: bad stage");
    st.stage = static_cast<Stage>(stage);
    st.stage_begin = r.i32();
    st.history = LossHistory(r.i32());
    for (double l : r.f64s()) st.history.append(l);
    const bool has_prev = r.u8() != 0;
    const double prev = r.f64();
    if (has_prev) st.prev_batch_loss = prev;
    st.hard_prune_epoch = r.i32();
    st.cum_train_flops = r.f64();
    st.cum_dense_train_flops = r.f64();
  }
  {
    Reader r = open("CAND");
    const std::uint64_t n = r.u64();
    for (std::uint64_t i = 0; i < n; ++i) {
      const Pattern p = Pattern::from_mask(r.u16());
      st.candidates.set_score(p, r.i64());
    }
  }
  {
    Reader r = open("POOL");
    if (r.u8()) {
      const int capacity = r.i32();
      st.pool = PatternPool::from_json(r.str(), capacity);
    }
  }
  {
    Reader r = open("OCCT");
    if (r.u8()) {
      const std::uint64_t pool_size = r.u64();
      const std::uint64_t counted = r.u64();
      const std::uint64_t skipped = r.u64();
      std::vector<OccurrenceTable::Layer> layers(r.u32());
      for (auto& layer : layers) {
        layer.tracked = r.u8() != 0;
        layer.channels = r.i32();
        layer.counts = r.ints<std::uint32_t>();
        layer.importance = r.f64s();
      }
      st.occurrence = OccurrenceTable::from_raw(std::move(layers), pool_size, counted, skipped);
    }
  }
  {
    Reader r = open("PLAN");
    if (r.u8()) st.plan = read_plan(r);
  }
  {
    Reader r = open("INDX");
    ck.indices.resize(r.u32());
    for (std::size_t l = 0; l < ck.indices.size(); ++l) {
      if (!r.u8()) continue;
      SparsityIndex idx;
      idx.rows = r.i32();
      idx.cols = r.i32();
      idx.nnz_per_row = r.i32();
      idx.row_ptr = r.ints<std::int32_t>();
      idx.col_ind = r.ints<std::int32_t>();
      idx.tile_offsets = r.ints<std::int32_t>();
      idx.validate();
      if (!st.plan || !st.plan->frozen() || l >= st.plan->size()) {
        throw IntegrityError("checkpoint: sparsity index without a frozen plan");
      }
      const auto rebuilt = build_index(*st.plan, l, TileConfig{ck.config.tile_budget});
      if (!(*rebuilt == idx)) {
        throw IntegrityError("checkpoint: stored index of layer " + std::to_string(l) +
                             " disagrees with the plan");
      }
      ck.indices[l] = rebuilt;
    }
  }
  {
    Reader r = open("METR");
    const std::uint64_t n = r.u64();
    for (std::uint64_t i = 0; i < n; ++i) st.metrics.push_back(read_row(r));
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = serialize_checkpoint(ckpt);
  write_text_atomic(path, std::string(bytes.begin(), bytes.end()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace pattrain
