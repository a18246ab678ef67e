#include "celltrack/imaging/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include "celltrack/numerics/ctn.hpp"

namespace celltrack::imaging {

namespace fs = std::filesystem;

void FrameSequence::validate() const {
  if (frames < 1 || height < 1 || width < 1) throw ShapeError("frame sequence needs at least one non-empty frame");
  for (float v : voxels) {
    if (!(v >= 0.0f && v <= 1.0f)) throw ShapeError("frame sequence value outside [0, 1]");
  }
}

namespace {

// Next header token of a PNM file, skipping whitespace and '#' comments.
std::string next_token(std::istream& is, const std::string& name) {
  std::string tok;
  int ch;
  while ((ch = is.get()) != EOF) {
    if (ch == '#') {
      while ((ch = is.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  if (tok.empty()) throw IoError(name + ": truncated PGM header");
  return tok;
}

std::size_t parse_extent(const std::string& tok, const std::string& name) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(tok, &pos);
    if (pos != tok.size() || v <= 0) throw std::invalid_argument(tok);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw IoError(name + ": malformed PGM header value '" + tok + "'");
  }
}

std::string frame_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%05zu.pgm", index);
  return buf;
}

}  // namespace

PgmImage read_pgm(const fs::path& path) {
  const std::string name = path.string();
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + name);
  if (next_token(is, name) != "P5") throw IoError(name + ": not a binary P5 PGM");
  PgmImage img;
  img.width = parse_extent(next_token(is, name), name);
  img.height = parse_extent(next_token(is, name), name);
  const std::size_t maxval = parse_extent(next_token(is, name), name);
  if (maxval != 255) throw IoError(name + ": only 8-bit PGM (maxval 255) is supported, got " + std::to_string(maxval));
  img.pixels.resize(img.width * img.height);
  if (!is.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()))) {
    throw IoError(name + ": truncated pixel data");
  }
  return img;
}

void write_pgm(const fs::path& path, const PgmImage& image) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
  if (!os) throw IoError("failed writing " + path.string());
}

FrameSequence load_sequence(const fs::path& directory) {
  if (!fs::is_directory(directory)) throw IoError(directory.string() + ": not a directory");
  static const std::regex pattern(R"(frame_(\d{5})\.pgm)");
  std::map<std::size_t, fs::path> files;
  for (const auto& entry : fs::directory_iterator(directory)) {
    std::smatch m;
    const std::string fname = entry.path().filename().string();
    if (std::regex_match(fname, m, pattern)) files.emplace(std::stoul(m[1].str()), entry.path());
  }
  if (files.empty()) throw IoError(directory.string() + ": no frame_%05d.pgm files");
  const std::size_t count = files.rbegin()->first + 1;
  for (std::size_t i = 0; i < count; ++i) {
    if (!files.contains(i)) throw IoError((directory / frame_name(i)).string() + ": missing frame");
  }

  FrameSequence seq;
  for (const auto& [index, path] : files) {
    const PgmImage img = read_pgm(path);
    if (index == 0) {
      seq = FrameSequence(count, img.height, img.width);
      seq.source_id = directory.string();
    } else if (img.height != seq.height || img.width != seq.width) {
      throw IoError(path.string() + ": frame is " + std::to_string(img.height) + "x" + std::to_string(img.width) +
                    ", expected " + std::to_string(seq.height) + "x" + std::to_string(seq.width));
    }
    auto dst = seq.frame(index);
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<float>(img.pixels[i]) / 255.0f;
  }
  return seq;
}

void save_sequence(const FrameSequence& seq, const fs::path& directory) {
  fs::create_directories(directory);
  for (std::size_t t = 0; t < seq.frames; ++t) {
    PgmImage img{seq.height, seq.width, std::vector<std::uint8_t>(seq.frame_size())};
    auto src = seq.frame(t);
    for (std::size_t i = 0; i < src.size(); ++i) {
      img.pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(src[i], 0.0f, 1.0f) * 255.0f));
    }
    write_pgm(directory / frame_name(t), img);
  }
}

std::vector<EventPoint> read_points_csv(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw IoError(path.string() + ": empty annotation file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "frame,row,col") throw IoError(path.string() + ": expected header 'frame,row,col'");
  std::vector<EventPoint> points;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    EventPoint p;
    char c1 = 0, c2 = 0;
    if (!(ls >> p.frame >> c1 >> p.row >> c2 >> p.col) || c1 != ',' || c2 != ',' || !(ls >> std::ws).eof()) {
      throw IoError(path.string() + ": malformed row " + std::to_string(row));
    }
    points.push_back(p);
  }
  return points;
}

void write_points_csv(const fs::path& path, const std::vector<EventPoint>& points) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << "frame,row,col\n";
  for (const auto& p : points) os << p.frame << ',' << p.row << ',' << p.col << '\n';
  if (!os) throw IoError("failed writing " + path.string());
}

void save_binary_volume(const fs::path& path, const BinaryVolume& vol) {
  std::vector<float> data(vol.voxels.begin(), vol.voxels.end());
  numerics::write_ctn(path, {vol.frames, vol.height, vol.width}, data);
}

BinaryVolume load_binary_volume(const fs::path& path) {
  auto arr = numerics::read_ctn(path);
  if (arr.dims.size() != 3) throw IoError(path.string() + ": expected a rank-3 volume");
  BinaryVolume vol(arr.dims[0], arr.dims[1], arr.dims[2]);
  for (std::size_t i = 0; i < arr.data.size(); ++i) {
    if (arr.data[i] != 0.0f && arr.data[i] != 1.0f) throw IoError(path.string() + ": non-binary voxel value");
    vol.voxels[i] = arr.data[i] != 0.0f ? 1 : 0;
  }
  return vol;
}

void save_volume(const fs::path& path, const Volume3<float>& vol) {
  numerics::write_ctn(path, {vol.frames, vol.height, vol.width}, vol.voxels);
}

Volume3<float> load_volume(const fs::path& path) {
  auto arr = numerics::read_ctn(path);
  if (arr.dims.size() != 3) throw IoError(path.string() + ": expected a rank-3 volume");
  Volume3<float> vol(arr.dims[0], arr.dims[1], arr.dims[2]);
  vol.voxels = std::move(arr.data);
  return vol;
}

}  // namespace celltrack::imaging
