#include "lmr/serialize.hpp"

#include "lmr/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace lmr::ser {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
    double v = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
        throw DataError("malformed file: bad numeric literal '" + std::string(text) + "'");
    return v;
}

std::size_t Field::numel() const {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
}

Writer::Writer(std::ostream& os, std::string_view magic) : os_(os) {
    os_ << magic << '\n';
}

void Writer::field(std::string_view name, const std::vector<double>& data,
                   const std::vector<std::size_t>& dims) {
    os_ << "field " << name << " f " << dims.size();
    std::size_t n = 1;
    for (auto d : dims) {
        os_ << ' ' << d;
        n *= d;
    }
    os_ << '\n';
    if (n != data.size())
        throw NumericError("serialize: field '" + std::string(name) + "' dims disagree with data size");
    for (std::size_t i = 0; i < data.size(); ++i)
        os_ << format_double(data[i]) << ((i + 1) % 16 == 0 || i + 1 == data.size() ? '\n' : ' ');
    if (data.empty()) os_ << '\n';
}

void Writer::field(std::string_view name, const std::vector<std::int64_t>& data,
                   const std::vector<std::size_t>& dims) {
    os_ << "field " << name << " i " << dims.size();
    std::size_t n = 1;
    for (auto d : dims) {
        os_ << ' ' << d;
        n *= d;
    }
    os_ << '\n';
    if (n != data.size())
        throw NumericError("serialize: field '" + std::string(name) + "' dims disagree with data size");
    for (std::size_t i = 0; i < data.size(); ++i)
        os_ << data[i] << ((i + 1) % 32 == 0 || i + 1 == data.size() ? '\n' : ' ');
    if (data.empty()) os_ << '\n';
}

void Writer::field(std::string_view name, std::string_view value) {
    if (value.find('\n') != std::string_view::npos)
        throw NumericError("serialize: string field '" + std::string(name) + "' must be single-line");
    os_ << "field " << name << " s\n" << value << '\n';
}

void Writer::end() {
    if (!ended_) {
        os_ << "end\n";
        ended_ = true;
    }
}

namespace {

[[noreturn]] void malformed(const std::string& what) {
    throw DataError("malformed file: " + what);
}

} // namespace

Reader::Reader(std::istream& is, std::string_view expected_magic) {
    std::string magic;
    if (!std::getline(is, magic)) malformed("empty stream");
    if (magic != expected_magic)
        throw DataError("version mismatch: expected '" + std::string(expected_magic) +
                        "', found '" + magic + "'");
    std::string tok;
    while (true) {
        if (!(is >> tok)) malformed("missing 'end' terminator");
        if (tok == "end") break;
        if (tok != "field") malformed("expected 'field', found '" + tok + "'");
        std::string name;
        std::string kind;
        if (!(is >> name >> kind)) malformed("truncated field header");
        Field f;
        if (kind == "s") {
            f.kind = 's';
            is.ignore(); // newline after header
            if (!std::getline(is, f.sdata)) malformed("truncated string field '" + name + "'");
        } else if (kind == "f" || kind == "i") {
            f.kind = kind[0];
            std::size_t rank = 0;
            if (!(is >> rank) || rank > 8) malformed("bad rank in field '" + name + "'");
            f.dims.resize(rank);
            for (auto& d : f.dims)
                if (!(is >> d)) malformed("truncated dims in field '" + name + "'");
            const std::size_t n = f.numel();
            if (f.kind == 'f') {
                f.fdata.resize(n);
                for (auto& v : f.fdata) {
                    if (!(is >> tok)) malformed("truncated data in field '" + name + "'");
                    v = parse_double(tok);
                }
            } else {
                f.idata.resize(n);
                for (auto& v : f.idata)
                    if (!(is >> v)) malformed("truncated data in field '" + name + "'");
            }
        } else {
            malformed("unknown field kind '" + kind + "'");
        }
        if (!fields_.emplace(name, std::move(f)).second)
            malformed("duplicate field '" + name + "'");
    }
}

bool Reader::has(std::string_view name) const { return fields_.count(name) > 0; }

const Field& Reader::get(std::string_view name) const {
    auto it = fields_.find(name);
    if (it == fields_.end()) malformed("missing field '" + std::string(name) + "'");
    return it->second;
}

const std::vector<double>& Reader::doubles(std::string_view name) const {
    const Field& f = get(name);
    if (f.kind != 'f') malformed("field '" + std::string(name) + "' is not numeric");
    return f.fdata;
}

const std::vector<std::int64_t>& Reader::ints(std::string_view name) const {
    const Field& f = get(name);
    if (f.kind != 'i') malformed("field '" + std::string(name) + "' is not integral");
    return f.idata;
}

const std::string& Reader::str(std::string_view name) const {
    const Field& f = get(name);
    if (f.kind != 's') malformed("field '" + std::string(name) + "' is not a string");
    return f.sdata;
}

const Field& Reader::get_checked(std::string_view name,
                                 const std::vector<std::size_t>& dims) const {
    const Field& f = get(name);
    if (f.dims != dims) {
        std::ostringstream oss;
        oss << "dimension mismatch in field '" << name << "': expected (";
        for (std::size_t i = 0; i < dims.size(); ++i) oss << (i ? "," : "") << dims[i];
        oss << "), found (";
        for (std::size_t i = 0; i < f.dims.size(); ++i) oss << (i ? "," : "") << f.dims[i];
        oss << ")";
        throw DataError(oss.str());
    }
    return f;
}

void write_file(const std::filesystem::path& path, std::string_view magic,
                const std::function<void(Writer&)>& body) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path.string());
    Writer w(os, magic);
    body(w);
    w.end();
    os.flush();
    if (!os) throw IoError("write failed: " + path.string());
}

Reader read_file(const std::filesystem::path& path, std::string_view expected_magic) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open for reading: " + path.string());
    return Reader(is, expected_magic);
}

} // namespace lmr::ser
