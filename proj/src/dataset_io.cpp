#include "rdro/dataset_io.hpp"

#include "rdro/errors.hpp"

#include <json.hpp>

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace rdro {

namespace {

static_assert(std::endian::native == std::endian::little, "binary dataset format assumes a little-endian host");

constexpr char kMagic[4] = {'R', 'D', 'R', 'O'};
constexpr std::uint32_t kVersion = 1;

std::vector<std::string> split(std::string const &line, char sep)
{
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) {
    out.push_back(cur);
  }
  if (!line.empty() && line.back() == sep) { out.emplace_back(); }
  return out;
}

double parse_double(std::string const &field, std::size_t line_no)
{
  double value = 0.0;
  char const *first = field.data();
  char const *last = field.data() + field.size();
  while (first < last && *first == ' ') {
    ++first;
  }
  auto const [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw InvalidArgument("csv line " + std::to_string(line_no) + ": cannot parse '" + field + "' as a number");
  }
  return value;
}

template <typename T>
void put(std::ostream &os, T const &value)
{
  os.write(reinterpret_cast<char const *>(&value), sizeof(T));
}

template <typename T>
T get(std::istream &is)
{
  T value{};
  is.read(reinterpret_cast<char *>(&value), sizeof(T));
  if (!is) { throw InvalidArgument("binary dataset truncated"); }
  return value;
}

} // namespace

void write_csv(Dataset const &data, std::ostream &os)
{
  data.validate();
  for (Eigen::Index j = 0; j < data.dim(); ++j) {
    os << 'x' << j << ',';
  }
  os << "y\n";
  char buf[32];
  auto emit = [&](double v) {
    auto const res = std::to_chars(buf, buf + sizeof(buf), v);
    os.write(buf, res.ptr - buf);
  };
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (Eigen::Index j = 0; j < data.dim(); ++j) {
      emit(data.covariates(i, j));
      os << ',';
    }
    emit(data.labels[i]);
    os << '\n';
  }
}

void write_csv(Dataset const &data, std::filesystem::path const &path)
{
  std::ofstream os(path);
  if (!os) { throw InvalidArgument("cannot open " + path.string() + " for writing"); }
  write_csv(data, os);
}

Dataset read_csv(std::istream &is, double sigma)
{
  std::string line;
  if (!std::getline(is, line)) { throw InvalidArgument("csv is empty (missing header)"); }
  if (!line.empty() && line.back() == '\r') { line.pop_back(); }
  auto const header = split(line, ',');
  if (header.empty() || header.back() != "y") { throw InvalidArgument("csv header must end with column 'y'"); }
  auto const d = header.size() - 1;
  for (std::size_t j = 0; j < d; ++j) {
    if (header[j] != "x" + std::to_string(j)) {
      throw InvalidArgument("csv header column " + std::to_string(j) + " must be 'x" + std::to_string(j) + "'");
    }
  }
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') { line.pop_back(); }
    if (line.empty()) { continue; }
    auto const fields = split(line, ',');
    if (fields.size() != d + 1) {
      throw InvalidArgument("csv line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                            " fields, expected " + std::to_string(d + 1));
    }
    for (auto const &f : fields) {
      values.push_back(parse_double(f, line_no));
    }
    ++rows;
  }
  Dataset out;
  out.sigma = sigma;
  out.covariates.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d));
  out.labels.resize(static_cast<Eigen::Index>(rows));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      out.covariates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * (d + 1) + j];
    }
    out.labels[static_cast<Eigen::Index>(i)] = values[i * (d + 1) + d];
  }
  return out;
}

Dataset read_csv(std::filesystem::path const &path, double sigma)
{
  std::ifstream is(path);
  if (!is) { throw InvalidArgument("cannot open " + path.string()); }
  return read_csv(is, sigma);
}

Eigen::MatrixXd read_points_csv(std::istream &is)
{
  std::string line;
  if (!std::getline(is, line)) { throw InvalidArgument("csv is empty (missing header)"); }
  if (!line.empty() && line.back() == '\r') { line.pop_back(); }
  auto const k = split(line, ',').size();
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') { line.pop_back(); }
    if (line.empty()) { continue; }
    auto const fields = split(line, ',');
    if (fields.size() != k) {
      throw InvalidArgument("csv line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                            " fields, expected " + std::to_string(k));
    }
    for (auto const &f : fields) {
      values.push_back(parse_double(f, line_no));
    }
    ++rows;
  }
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  return Eigen::Map<RowMajor const>(values.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(k));
}

Eigen::MatrixXd read_points_csv(std::filesystem::path const &path)
{
  std::ifstream is(path);
  if (!is) { throw InvalidArgument("cannot open " + path.string()); }
  return read_points_csv(is);
}

void write_binary(Dataset const &data, std::filesystem::path const &path)
{
  data.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) { throw InvalidArgument("cannot open " + path.string() + " for writing"); }
  os.write(kMagic, 4);
  put(os, kVersion);
  put(os, static_cast<std::uint64_t>(data.size()));
  put(os, static_cast<std::uint64_t>(data.dim()));
  put(os, static_cast<std::uint8_t>(data.has_intercept ? 1 : 0));
  put(os, data.sigma);
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (Eigen::Index j = 0; j < data.dim(); ++j) {
      put(os, data.covariates(i, j));
    }
  }
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    put(os, data.labels[i]);
  }
}

Dataset read_binary(std::filesystem::path const &path)
{
  std::ifstream is(path, std::ios::binary);
  if (!is) { throw InvalidArgument("cannot open " + path.string()); }
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) { throw InvalidArgument(path.string() + " is not a dataset file"); }
  if (get<std::uint32_t>(is) != kVersion) { throw InvalidArgument("unsupported dataset version"); }
  auto const n = static_cast<Eigen::Index>(get<std::uint64_t>(is));
  auto const d = static_cast<Eigen::Index>(get<std::uint64_t>(is));
  Dataset out;
  out.has_intercept = get<std::uint8_t>(is) != 0;
  out.sigma = get<double>(is);
  out.covariates.resize(n, d);
  out.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      out.covariates(i, j) = get<double>(is);
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    out.labels[i] = get<double>(is);
  }
  return out;
}

void write_sidecar(Dataset const &data, std::filesystem::path const &path)
{
  nlohmann::json j;
  j["corrupted_indices"] = data.corrupted ? *data.corrupted : std::vector<std::size_t>{};
  j["n"] = data.size();
  std::ofstream os(path);
  if (!os) { throw InvalidArgument("cannot open " + path.string() + " for writing"); }
  os << j.dump(2) << '\n';
}

void read_sidecar(Dataset &data, std::filesystem::path const &path)
{
  std::ifstream is(path);
  if (!is) { throw InvalidArgument("cannot open " + path.string()); }
  auto const j = nlohmann::json::parse(is);
  auto idx = j.at("corrupted_indices").get<std::vector<std::size_t>>();
  for (auto i : idx) {
    if (i >= static_cast<std::size_t>(data.size())) { throw InvalidArgument("sidecar index out of range"); }
  }
  data.corrupted = std::move(idx);
}

} // namespace rdro
