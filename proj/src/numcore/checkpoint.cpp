#include "numcore/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

namespace numcore {
namespace {

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

void write_entry(std::ostream& os, const std::string& name, const Tensor& t) {
  write_u32(os, static_cast<std::uint32_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  write_u32(os, static_cast<std::uint32_t>(t.rank()));
  for (Index i = 0; i < t.rank(); ++i) {
    write_u32(os, static_cast<std::uint32_t>(t.dim(i)));
  }
  os.write(reinterpret_cast<const char*>(t.data()),
           static_cast<std::streamsize>(t.size() * sizeof(double)));
}

struct RawEntry {
  std::string name;
  Tensor tensor;
};

RawEntry read_entry(std::istream& is) {
  RawEntry e;
  const std::uint32_t name_len = read_u32(is);
  e.name.resize(name_len);
  is.read(e.name.data(), name_len);
  const std::uint32_t rank = read_u32(is);
  Shape shape;
  for (std::uint32_t i = 0; i < rank; ++i) {
    shape.push_back(static_cast<Index>(read_u32(is)));
  }
  e.tensor = Tensor(shape);
  is.read(reinterpret_cast<char*>(e.tensor.data()),
          static_cast<std::streamsize>(e.tensor.size() * sizeof(double)));
  if (!is) throw CheckpointError("truncated checkpoint entry: " + e.name);
  return e;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamStore& params,
                     const AdamState* adam) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw CheckpointError("cannot open for writing: " + path);

  std::uint32_t count = 0;
  for (const auto& [name, e] : params) {
    (void)name;
    (void)e;
    ++count;
  }
  if (adam != nullptr) {
    count += static_cast<std::uint32_t>(adam->first_moments().size() +
                                        adam->second_moments().size()) +
             1;
  }

  os.write("DTXM", 4);
  write_u32(os, kCheckpointVersion);
  std::uint32_t flags = kCheckpointHasBuffers;
  if (adam != nullptr) flags |= kCheckpointHasAdam;
  write_u32(os, flags);
  write_u32(os, count);

  for (const auto& [name, e] : params) {
    write_entry(os, (e.trainable ? "p/" : "b/") + name, e.value);
  }
  if (adam != nullptr) {
    for (const auto& [name, t] : adam->first_moments()) {
      write_entry(os, "am/" + name, t);
    }
    for (const auto& [name, t] : adam->second_moments()) {
      write_entry(os, "av/" + name, t);
    }
    write_entry(os, "as/step",
                Tensor::scalar(static_cast<double>(adam->step_count())));
  }
  if (!os) throw CheckpointError("write failed: " + path);
}

void load_checkpoint(const std::string& path, ParamStore& params,
                     AdamState* adam) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open: " + path);

  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "DTXM", 4) != 0) {
    throw CheckpointError("bad magic in " + path);
  }
  const std::uint32_t version = read_u32(is);
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " +
                          std::to_string(version));
  }
  const std::uint32_t flags = read_u32(is);
  const std::uint32_t count = read_u32(is);

  for (std::uint32_t i = 0; i < count; ++i) {
    RawEntry e = read_entry(is);
    if (e.name.rfind("p/", 0) == 0 || e.name.rfind("b/", 0) == 0) {
      const std::string key = e.name.substr(2);
      if (!params.has(key)) {
        throw CheckpointError("checkpoint names unknown parameter: " + key);
      }
      auto& entry = params.at(key);
      if (!entry.value.same_shape(e.tensor)) {
        throw CheckpointError("shape mismatch loading " + key + ": file " +
                              shape_str(e.tensor.shape()) + " vs model " +
                              shape_str(entry.value.shape()));
      }
      entry.value = std::move(e.tensor);
    } else if (e.name.rfind("am/", 0) == 0) {
      if (adam != nullptr) adam->first_moments()[e.name.substr(3)] = std::move(e.tensor);
    } else if (e.name.rfind("av/", 0) == 0) {
      if (adam != nullptr) adam->second_moments()[e.name.substr(3)] = std::move(e.tensor);
    } else if (e.name == "as/step") {
      if (adam != nullptr) {
        adam->set_step_count(static_cast<std::int64_t>(e.tensor[0]));
      }
    } else {
      throw CheckpointError("unknown checkpoint section in entry: " + e.name);
    }
  }
  if (adam != nullptr && (flags & kCheckpointHasAdam) == 0) {
    throw CheckpointError("checkpoint has no optimizer state: " + path);
  }
}

}  // namespace numcore
