#include "crosstag/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace crosstag {

namespace {

constexpr char kMagic[4] = {'X', 'T', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

class Writer {
 public:
  std::vector<std::uint8_t> out;

  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out.insert(out.end(), b, b + n);
  }
  template <typename T>
  void put(T v) {
    raw(&v, sizeof(T));
  }
  void str(const std::string& s, bool wide) {
    if (wide)
      put<std::uint64_t>(s.size());
    else
      put<std::uint16_t>(static_cast<std::uint16_t>(s.size()));
    raw(s.data(), s.size());
  }
  void array(const Array& a) {
    put<std::uint8_t>(static_cast<std::uint8_t>(a.dtype()));
    put<std::uint8_t>(static_cast<std::uint8_t>(a.shape().size()));
    for (std::size_t d : a.shape()) put<std::uint64_t>(d);
    dispatch_dtype(a.dtype(), [&]<typename T>() { raw(a.data<T>(), a.numel() * sizeof(T)); });
  }
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& bytes) : data_(bytes) {}

  void raw(void* p, std::size_t n) {
    if (pos_ + n > data_.size()) throw std::runtime_error("checkpoint: truncated file");
    std::memcpy(p, data_.data() + pos_, n);
    pos_ += n;
  }
  template <typename T>
  T get() {
    T v;
    raw(&v, sizeof(T));
    return v;
  }
  std::string str(bool wide) {
    std::size_t n = wide ? get<std::uint64_t>() : get<std::uint16_t>();
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }
  Array array() {
    auto dt = static_cast<Dtype>(get<std::uint8_t>());
    if (dt != Dtype::F32 && dt != Dtype::F64) throw std::runtime_error("checkpoint: bad dtype");
    std::size_t rank = get<std::uint8_t>();
    Shape shape(rank);
    for (std::size_t i = 0; i < rank; ++i) shape[i] = get<std::uint64_t>();
    Array a(dt, std::move(shape));
    dispatch_dtype(dt, [&]<typename T>() { raw(a.data<T>(), a.numel() * sizeof(T)); });
    return a;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  const std::vector<std::uint8_t>& data_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const ParamStore& store, const std::string& meta_json,
                                               const std::vector<const Adam*>& optimizers) {
  Writer w;
  w.raw(kMagic, 4);
  w.put<std::uint32_t>(kVersion);
  w.str(meta_json, true);
  auto params = store.all();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
  for (const Param* p : params) {
    w.str(p->name, false);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(p->partition));
    w.put<std::uint8_t>(p->frozen ? 1 : 0);
    w.array(p->value);
  }
  w.put<std::uint8_t>(static_cast<std::uint8_t>(optimizers.size()));
  for (const Adam* opt : optimizers) {
    w.put<std::int64_t>(opt->steps());
    w.put<double>(opt->config().lr);
    w.put<double>(opt->config().beta1);
    w.put<double>(opt->config().beta2);
    w.put<double>(opt->config().eps);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(opt->slots().size()));
    for (const auto& [name, slot] : opt->slots()) {
      w.str(name, false);
      w.array(slot.m);
      w.array(slot.v);
    }
  }
  return w.out;
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("checkpoint: bad magic");
  std::uint32_t version = r.get<std::uint32_t>();
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  Checkpoint ck;
  ck.meta_json = r.str(true);
  std::uint32_t n = r.get<std::uint32_t>();
  std::unique_ptr<ParamStore> store;
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string name = r.str(false);
    auto part = static_cast<Partition>(r.get<std::uint8_t>());
    bool frozen = r.get<std::uint8_t>() != 0;
    Array value = r.array();
    if (!store) store = std::make_unique<ParamStore>(value.dtype());
    Param& p = store->create(name, part, value.shape());
    p.value = std::move(value);
    p.frozen = frozen;
  }
  if (!store) store = std::make_unique<ParamStore>(Dtype::F32);
  ck.store = std::move(store);
  std::uint8_t n_opt = r.get<std::uint8_t>();
  for (std::uint8_t oi = 0; oi < n_opt; ++oi) {
    AdamSnapshot snap;
    snap.t = r.get<std::int64_t>();
    snap.config.lr = r.get<double>();
    snap.config.beta1 = r.get<double>();
    snap.config.beta2 = r.get<double>();
    snap.config.eps = r.get<double>();
    std::uint32_t n_slots = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < n_slots; ++i) {
      std::string name = r.str(false);
      Array m = r.array();
      Array v = r.array();
      snap.slots.emplace_back(std::move(name), std::make_pair(std::move(m), std::move(v)));
    }
    ck.adam_states.push_back(std::move(snap));
  }
  if (!r.done()) throw std::runtime_error("checkpoint: trailing bytes");
  return ck;
}

void save_checkpoint(const std::string& path, const ParamStore& store, const std::string& meta_json,
                     const std::vector<const Adam*>& optimizers) {
  auto bytes = serialize_checkpoint(store, meta_json, optimizers);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace crosstag
