#pragma once

#include "rdro/data_model.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace rdro {

// CSV: header `x0,...,x{d-1},y`, one sample per line, values printed with
// round-trip precision. The corruption sidecar is not part of the CSV.
void write_csv(Dataset const &data, std::ostream &os);
void write_csv(Dataset const &data, std::filesystem::path const &path);
Dataset read_csv(std::istream &is, double sigma = 1.0);
Dataset read_csv(std::filesystem::path const &path, double sigma = 1.0);

// Plain numeric CSV with one header line of column names; every column is a
// coordinate.
Eigen::MatrixXd read_points_csv(std::istream &is);
Eigen::MatrixXd read_points_csv(std::filesystem::path const &path);

// Binary: magic "RDRO", u32 version, u64 N, u64 d, u8 has_intercept, f64 sigma,
// then N*d covariates (row-major) and N labels, all little-endian IEEE doubles.
void write_binary(Dataset const &data, std::filesystem::path const &path);
Dataset read_binary(std::filesystem::path const &path);

// Sidecar JSON {"corrupted_indices": [...]} for ground-truth bookkeeping.
void write_sidecar(Dataset const &data, std::filesystem::path const &path);
void read_sidecar(Dataset &data, std::filesystem::path const &path);

} // namespace rdro
