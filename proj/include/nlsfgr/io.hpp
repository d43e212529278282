#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace nlsfgr::io {

// Creates the parent directory of `path` if needed.
void ensure_parent_dir(const std::string& path);
void ensure_dir(const std::string& path);

void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

// Shortest decimal form that round-trips a double, so CSV output is
// deterministic and lossless.
std::string format_double(double x);

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);
    void row(const std::vector<double>& values);
    void flush() { out_.flush(); }

private:
    std::ofstream out_;
    std::size_t columns_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::vector<double> column(const std::string& name) const;
};
CsvTable read_csv(const std::string& path);

// Little-endian binary streams used by the branch and checkpoint blobs.
class BinaryWriter {
public:
    explicit BinaryWriter(const std::string& path);
    void tag(const char (&magic)[9]);
    void u64(std::uint64_t v);
    void f64(double v);
    void f64_array(const double* data, std::size_t count);

private:
    std::ofstream out_;
};

class BinaryReader {
public:
    explicit BinaryReader(const std::string& path);
    void expect_tag(const char (&magic)[9]);
    std::uint64_t u64();
    double f64();
    void f64_array(double* data, std::size_t count);

private:
    std::ifstream in_;
    std::string path_;
};

// Runs body(i) for i in [0, count) on up to `jobs` threads. Each index must
// write only its own output slot, which keeps results independent of `jobs`.
void parallel_for(int jobs, std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace nlsfgr::io
