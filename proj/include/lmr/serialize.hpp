#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace lmr::ser {

// Shortest representation that parses back to the identical double.
std::string format_double(double v);
double parse_double(std::string_view text);

// ---------------------------------------------------------------------------
// Block text format shared by model, dataset and checkpoint files.
//
//   <magic line, e.g. lmr-model-v1>
//   field <name> f <rank> <d0> <d1> ...
//   <numel whitespace-separated values>
//   field <name> i <rank> <d0> ...
//   <numel integers>
//   field <name> s
//   <one raw line>
//   end
//
// Values are written with format_double, so a save/load cycle is bit-exact.
// ---------------------------------------------------------------------------

struct Field {
    char kind = 'f'; // 'f' double, 'i' int64, 's' string
    std::vector<std::size_t> dims;
    std::vector<double> fdata;
    std::vector<std::int64_t> idata;
    std::string sdata;

    std::size_t numel() const;
};

class Writer {
public:
    Writer(std::ostream& os, std::string_view magic);

    void field(std::string_view name, const std::vector<double>& data,
               const std::vector<std::size_t>& dims);
    void field(std::string_view name, const std::vector<std::int64_t>& data,
               const std::vector<std::size_t>& dims);
    void field(std::string_view name, std::string_view value);
    void end();

private:
    std::ostream& os_;
    bool ended_ = false;
};

class Reader {
public:
    // Throws DataError with a "version mismatch" message when the magic line
    // differs, and "malformed file" on any structural problem.
    Reader(std::istream& is, std::string_view expected_magic);

    bool has(std::string_view name) const;
    const Field& get(std::string_view name) const; // malformed-file error if absent
    const std::vector<double>& doubles(std::string_view name) const;
    const std::vector<std::int64_t>& ints(std::string_view name) const;
    const std::string& str(std::string_view name) const;

    // Checked dimension access; mismatch produces a "dimension mismatch" error.
    const Field& get_checked(std::string_view name,
                             const std::vector<std::size_t>& dims) const;

private:
    std::map<std::string, Field, std::less<>> fields_;
};

// Convenience wrappers that open the file and map stream failures to IoError.
void write_file(const std::filesystem::path& path, std::string_view magic,
                const std::function<void(Writer&)>& body);
Reader read_file(const std::filesystem::path& path, std::string_view expected_magic);

} // namespace lmr::ser
