#include "bordernet/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <ostream>

namespace bordernet {
namespace {

constexpr char kMagic[4] = {'B', 'N', 'E', 'T'};
constexpr std::uint32_t kMaxRank = 8;
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 31;
constexpr std::uint32_t kMaxNameLength = 256;

enum Flags : std::uint32_t { kFrontTrainable = 1, kFrontNormalized = 2, kBankSeed = 4 };

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void f32(float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    u32(bits);
  }
  std::vector<unsigned char> take() { return std::move(out_); }

 private:
  std::vector<unsigned char> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& in) : in_(in) {}

  std::size_t remaining() const { return in_.size() - pos_; }

  void need(std::size_t n) const {
    if (remaining() < n) throw CheckpointError(CheckpointErrorCode::Truncated, "checkpoint is truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{in_[pos_++]} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{in_[pos_++]} << (8 * i);
    return v;
  }
  float f32() {
    const std::uint32_t bits = u32();
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  const std::vector<unsigned char>& in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<unsigned char> serialize_checkpoint(const Network& net) {
  const NetworkSpec& spec = net.spec();
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(spec.variant));
  std::uint32_t flags = 0;
  std::uint64_t bank_seed = 0;
  if (spec.front_trainable) flags |= kFrontTrainable;
  if (spec.front_filters) {
    if (spec.front_filters->normalization == FilterNormalization::L1Normalized) flags |= kFrontNormalized;
    if (spec.front_filters->seed) {
      flags |= kBankSeed;
      bank_seed = *spec.front_filters->seed;
    }
  }
  w.u32(flags);
  w.u64(spec.seed);
  w.u64(bank_seed);
  const auto params = net.parameters();
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    w.u32(static_cast<std::uint32_t>(p.name.size()));
    w.bytes(p.name.data(), p.name.size());
    w.u32(static_cast<std::uint32_t>(p.value.rank()));
    for (auto d : p.value.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (float v : p.value.data()) w.f32(v);
  }
  return w.take();
}

Network deserialize_checkpoint(const std::vector<unsigned char>& bytes, std::optional<Variant> expected) {
  Reader r(bytes);
  if (r.remaining() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw CheckpointError(CheckpointErrorCode::BadMagic, "not a checkpoint (bad magic)");
  }
  r.str(4);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError(CheckpointErrorCode::VersionMismatch,
                          "checkpoint version " + std::to_string(version) + " unsupported (expected " +
                              std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint32_t tag = r.u32();
  if (tag > static_cast<std::uint32_t>(Variant::RandomNet)) {
    throw CheckpointError(CheckpointErrorCode::Malformed, "unknown variant tag " + std::to_string(tag));
  }
  const auto variant = static_cast<Variant>(tag);
  if (expected && *expected != variant) {
    throw CheckpointError(CheckpointErrorCode::VariantMismatch, "checkpoint holds " + std::string(to_string(variant)) +
                                                                    ", expected " +
                                                                    std::string(to_string(*expected)));
  }
  const std::uint32_t flags = r.u32();
  const std::uint64_t seed = r.u64();
  const std::uint64_t bank_seed = r.u64();
  const std::uint32_t count = r.u32();
  if (count > 64) throw CheckpointError(CheckpointErrorCode::Malformed, "implausible tensor count");

  std::vector<Parameter> values;
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::uint32_t name_len = r.u32();
    if (name_len > kMaxNameLength) throw CheckpointError(CheckpointErrorCode::Malformed, "tensor name too long");
    std::string name = r.str(name_len);
    const std::uint32_t rank = r.u32();
    if (rank == 0 || rank > kMaxRank) {
      throw CheckpointError(CheckpointErrorCode::DimensionOverflow, "tensor '" + name + "' has rank " +
                                                                        std::to_string(rank));
    }
    Shape shape;
    std::uint64_t elements = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      const std::uint32_t d = r.u32();
      if (d == 0) throw CheckpointError(CheckpointErrorCode::Malformed, "zero dimension in '" + name + "'");
      elements *= d;
      if (elements > kMaxElements) {
        throw CheckpointError(CheckpointErrorCode::DimensionOverflow, "tensor '" + name + "' is too large");
      }
      shape.push_back(d);
    }
    r.need(static_cast<std::size_t>(elements) * 4);
    std::vector<float> data(static_cast<std::size_t>(elements));
    for (auto& v : data) v = r.f32();
    values.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  if (r.remaining() != 0) throw CheckpointError(CheckpointErrorCode::Malformed, "trailing bytes after checkpoint");

  NetworkSpec spec;
  spec.variant = variant;
  spec.front_trainable = (flags & kFrontTrainable) != 0;
  spec.seed = seed;
  if (variant != Variant::Vanilla) {
    if (values.size() < 4) throw CheckpointError(CheckpointErrorCode::Malformed, "missing front kernels");
    FilterBank bank;
    bank.kind = variant == Variant::BorderNet ? FilterKind::Oriented : FilterKind::Random;
    bank.normalization =
        (flags & kFrontNormalized) ? FilterNormalization::L1Normalized : FilterNormalization::RawOnes;
    if (flags & kBankSeed) bank.seed = bank_seed;
    for (std::size_t k = 0; k < 4; ++k) bank.kernels[k] = values[k].value;
    spec.front_filters = std::move(bank);
  }
  try {
    Network net(std::move(spec));
    net.load_values(values);
    return net;
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(CheckpointErrorCode::Malformed, std::string("checkpoint does not match architecture: ") +
                                                              e.what());
  }
}

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(net);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw CheckpointError(CheckpointErrorCode::WriteFailed, "cannot write " + path.string());
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw CheckpointError(CheckpointErrorCode::WriteFailed, "short write on " + path.string());
}

Network load_checkpoint(const std::filesystem::path& path, std::optional<Variant> expected) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError(CheckpointErrorCode::OpenFailed, "cannot open " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes, expected);
}

void write_sidecar(std::ostream& os, const Network& net, const std::map<std::string, std::string>& extra) {
  const NetworkSpec& spec = net.spec();
  os << "variant = " << to_string(spec.variant) << '\n';
  os << "format_version = " << kCheckpointVersion << '\n';
  os << "seed = " << spec.seed << '\n';
  os << "activation = " << spec.activation << '\n';
  os << "pooling = " << spec.pooling << '\n';
  os << "parameters = " << net.parameter_count() << '\n';
  os << "trainable_parameters = " << net.trainable_parameter_count() << '\n';
  if (spec.front_filters) {
    os << "front_kind = " << to_string(spec.front_filters->kind) << '\n';
    os << "front_normalization = " << to_string(spec.front_filters->normalization) << '\n';
    os << "front_trainable = " << (spec.front_trainable ? "true" : "false") << '\n';
    if (spec.front_filters->seed) os << "front_seed = " << *spec.front_filters->seed << '\n';
  }
  for (const auto& [key, value] : extra) os << key << " = " << value << '\n';
}

}  // namespace bordernet
