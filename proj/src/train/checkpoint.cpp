// Copyright 2026 The MorphNet Authors
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

#include "train/checkpoint.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <sstream>

#include "common/error.hpp"
#include "common/io.hpp"
#include "common/text.hpp"

namespace morphnet::train {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[4] = {'M', 'N', 'E', 'T'};

void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

void put_u64(std::string& out, std::uint64_t v) {
  char b[8];
  std::memcpy(b, &v, 8);
  out.append(b, 8);
}

class Reader {
 public:
  Reader(std::string_view data) : data_(data) {}

  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) fail(ErrorCode::kIntegrity, "checkpoint is truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, data_.data() + pos_, 4);
    pos_ += 4;
    return v;
  }
  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

std::string hex(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::hex);
  return std::string(buf, res.ptr);
}

double parse_hex(std::string_view s) {
  double v = 0;
  s = text::trim(s);
  auto res = std::from_chars(s.data(), s.data() + s.size(), v, std::chars_format::hex);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    fail(ErrorCode::kIntegrity, "checkpoint: bad state value '", s, "'");
  }
  return v;
}

std::string format_descriptor(const Checkpoint& c) {
  std::ostringstream os;
  os << c.arch_text;
  if (!c.arch_text.empty() && c.arch_text.back() != '\n') os << '\n';
  os << "state.epoch = " << c.state.epoch << '\n'
     << "state.best_val_loss = " << hex(c.state.best_val_loss) << '\n'
     << "state.adam_step = " << c.state.adam_step << '\n'
     << "state.lr = " << hex(c.state.lr) << '\n'
     << "state.seed = " << c.state.seed << '\n';
  return os.str();
}

void parse_descriptor(std::string_view desc, Checkpoint& c) {
  std::string arch;
  for (std::string_view line : text::split_lines(desc)) {
    if (!line.starts_with("state.")) {
      if (!line.empty()) {
        arch.append(line);
        arch.push_back('\n');
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(ErrorCode::kIntegrity, "checkpoint: bad state line");
    const auto key = text::trim(line.substr(6, eq - 6));
    const auto value = text::trim(line.substr(eq + 1));
    auto integer = [&](std::uint64_t& out) {
      if (!text::parse_number(value, out)) {
        fail(ErrorCode::kIntegrity, "checkpoint: bad state.", key);
      }
    };
    if (key == "epoch") {
      integer(c.state.epoch);
    } else if (key == "best_val_loss") {
      c.state.best_val_loss = parse_hex(value);
    } else if (key == "adam_step") {
      integer(c.state.adam_step);
    } else if (key == "lr") {
      c.state.lr = parse_hex(value);
    } else if (key == "seed") {
      integer(c.state.seed);
    } else {
      fail(ErrorCode::kIntegrity, "checkpoint: unknown state key '", key, "'");
    }
  }
  c.arch_text = std::move(arch);
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string serialize_checkpoint(const Checkpoint& c) {
  std::string out(kMagic, 4);
  put_u32(out, kCheckpointVersion);
  const std::string desc = format_descriptor(c);
  put_u32(out, static_cast<std::uint32_t>(desc.size()));
  out += desc;
  put_u32(out, static_cast<std::uint32_t>(c.tensors.size()));
  for (const NamedTensor& t : c.tensors) {
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    put_u32(out, static_cast<std::uint32_t>(t.value.rank()));
    for (std::size_t e : t.value.shape()) put_u32(out, static_cast<std::uint32_t>(e));
    out.append(reinterpret_cast<const char*>(t.value.raw()), t.value.size() * sizeof(float));
  }
  put_u64(out, fnv1a64(out));
  return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  if (bytes.size() < 4 + 4 + 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    fail(ErrorCode::kIntegrity, "not a checkpoint (bad magic)");
  }
  const std::string_view body = bytes.substr(0, bytes.size() - 8);
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + body.size(), 8);
  Reader r(body.substr(4));
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    fail(ErrorCode::kSchema, "checkpoint version ", version, " is not supported (expected ",
         kCheckpointVersion, ")");
  }
  if (fnv1a64(body) != stored) fail(ErrorCode::kIntegrity, "checkpoint checksum mismatch");
  Checkpoint c;
  const std::uint32_t desc_len = r.u32();
  parse_descriptor(r.bytes(desc_len), c);
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = std::string(r.bytes(r.u32()));
    const std::uint32_t rank = r.u32();
    if (rank == 0 || rank > 8) fail(ErrorCode::kIntegrity, "checkpoint: bad rank ", rank);
    ad::Shape shape(rank);
    std::uint64_t n = 1;
    for (auto& e : shape) {
      e = r.u32();
      n *= e;
      if (e == 0 || n > body.size()) fail(ErrorCode::kIntegrity, "checkpoint: bad extents");
    }
    const std::string_view raw = r.bytes(n * sizeof(float));
    std::vector<float> values(n);
    std::memcpy(values.data(), raw.data(), raw.size());
    t.value = ad::Tensor<float>(std::move(shape), std::move(values));
    c.tensors.push_back(std::move(t));
  }
  if (!r.done()) fail(ErrorCode::kIntegrity, "checkpoint has trailing bytes");
  return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& c) {
  io::write_file_atomic(path, serialize_checkpoint(c));
}

Checkpoint load_checkpoint(const std::string& path) {
  return deserialize_checkpoint(io::read_file(path));
}

Checkpoint capture(scaling::Network<float>& net, Adam<float>* adam, const TrainState& state) {
  Checkpoint c;
  c.arch_text = scaling::format_arch(net.arch());
  c.state = state;
  const auto params = net.parameters();
  for (const auto* p : params) c.tensors.push_back({p->name, p->value});
  if (adam && !adam->first_moments().empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      c.tensors.push_back({"opt.m." + params[i]->name, adam->first_moments()[i]});
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      c.tensors.push_back({"opt.v." + params[i]->name, adam->second_moments()[i]});
    }
  }
  return c;
}

void restore(const Checkpoint& c, scaling::Network<float>& net, Adam<float>* adam) {
  std::map<std::string_view, const ad::Tensor<float>*> by_name;
  for (const NamedTensor& t : c.tensors) by_name.emplace(t.name, &t.value);
  auto lookup = [&](const std::string& name, const ad::Shape& shape) {
    const auto it = by_name.find(name);
    if (it == by_name.end()) fail(ErrorCode::kIntegrity, "checkpoint lacks tensor ", name);
    if (it->second->shape() != shape) {
      fail(ErrorCode::kIntegrity, "checkpoint tensor ", name, " has shape ",
           ad::shape_string(it->second->shape()), ", network expects ",
           ad::shape_string(shape));
    }
    return it->second;
  };
  const auto params = net.parameters();
  for (auto* p : params) p->value = *lookup(p->name, p->value.shape());
  if (adam) {
    std::vector<ad::Tensor<float>> m, v;
    if (by_name.count("opt.m." + params.front()->name)) {
      for (auto* p : params) m.push_back(*lookup("opt.m." + p->name, p->value.shape()));
      for (auto* p : params) v.push_back(*lookup("opt.v." + p->name, p->value.shape()));
    }
    adam->restore(c.state.adam_step, c.state.lr, std::move(m), std::move(v));
  }
}

}  // namespace morphnet::train
