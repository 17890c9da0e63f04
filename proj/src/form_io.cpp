#include "tvcycles/form_io.hpp"

#include "json.hpp"
#include <sodium.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tvcycles {

namespace {

constexpr const char* kFormat = "tvcycles-form";
constexpr int kVersion = 1;

std::uint64_t to_little_endian(std::uint64_t v)
{
    if constexpr (std::endian::native == std::endian::big) {
        v = ((v & 0x00000000000000ffULL) << 56) | ((v & 0x000000000000ff00ULL) << 40) |
            ((v & 0x0000000000ff0000ULL) << 24) | ((v & 0x00000000ff000000ULL) << 8) |
            ((v & 0x000000ff00000000ULL) >> 8) | ((v & 0x0000ff0000000000ULL) >> 24) |
            ((v & 0x00ff000000000000ULL) >> 40) | ((v & 0xff00000000000000ULL) >> 56);
    }
    return v;
}

} // namespace

std::string encode_f64_base64(const Eigen::VectorXd& values)
{
    std::vector<unsigned char> bytes(static_cast<std::size_t>(values.size()) * 8);
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        const std::uint64_t le = to_little_endian(std::bit_cast<std::uint64_t>(values[i]));
        std::memcpy(bytes.data() + 8 * i, &le, 8);
    }
    const std::size_t cap = sodium_base64_encoded_len(bytes.size(), sodium_base64_VARIANT_ORIGINAL);
    std::string out(cap, '\0');
    sodium_bin2base64(out.data(), cap, bytes.data(), bytes.size(), sodium_base64_VARIANT_ORIGINAL);
    out.resize(std::strlen(out.c_str()));
    return out;
}

Eigen::VectorXd decode_f64_base64(const std::string& text)
{
    std::vector<unsigned char> bytes(text.size() / 4 * 3 + 3);
    std::size_t length = 0;
    if (sodium_base642bin(bytes.data(), bytes.size(), text.data(), text.size(), nullptr, &length, nullptr,
                          sodium_base64_VARIANT_ORIGINAL) != 0) {
        throw std::invalid_argument("form payload is not valid base64");
    }
    if (length % 8 != 0) throw std::invalid_argument("form payload length is not a multiple of 8 bytes");
    Eigen::VectorXd values(static_cast<Eigen::Index>(length / 8));
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        std::uint64_t le;
        std::memcpy(&le, bytes.data() + 8 * i, 8);
        values[i] = std::bit_cast<double>(to_little_endian(le));
    }
    return values;
}

std::string form_to_string(const DiscreteForm& form)
{
    const TorusGrid& grid = form.grid();
    nlohmann::ordered_json j;
    j["format"] = kFormat;
    j["version"] = kVersion;
    j["n"] = grid.dim();
    j["degree"] = form.degree();
    j["dims"] = std::vector<int>(grid.dims().begin(), grid.dims().end());
    j["lengths"] = std::vector<double>(grid.lengths().begin(), grid.lengths().end());
    j["encoding"] = "base64-f64le";
    j["values"] = encode_f64_base64(form.values());
    return j.dump(2) + "\n";
}

DiscreteForm form_from_string(const std::string& text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("form file is not JSON: ") + e.what());
    }
    try {
        if (j.value("format", std::string(kFormat)) != kFormat) throw std::invalid_argument("not a form file");
        if (j.value("version", kVersion) != kVersion) throw std::invalid_argument("unsupported form file version");
        const auto dims = j.at("dims").get<std::vector<int>>();
        std::vector<double> lengths =
            j.contains("lengths") ? j.at("lengths").get<std::vector<double>>() : std::vector<double>(dims.size(), 1.0);
        if (j.contains("n") && j.at("n").get<int>() != static_cast<int>(dims.size())) {
            throw std::invalid_argument("form file: n does not match dims");
        }
        GridPtr grid = make_grid(dims, std::move(lengths));
        const int degree = j.at("degree").get<int>();
        const std::string encoding = j.value("encoding", std::string("base64-f64le"));
        Eigen::VectorXd values;
        if (encoding == "base64-f64le") {
            values = decode_f64_base64(j.at("values").get<std::string>());
        } else if (encoding == "json") {
            const auto list = j.at("values").get<std::vector<double>>();
            values = Eigen::Map<const Eigen::VectorXd>(list.data(), static_cast<Eigen::Index>(list.size()));
        } else {
            throw std::invalid_argument("unknown form encoding '" + encoding + "'");
        }
        return {std::move(grid), degree, std::move(values)};
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("malformed form file: ") + e.what());
    }
}

void write_form(const std::filesystem::path& path, const DiscreteForm& form)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << form_to_string(form);
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

DiscreteForm read_form(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return form_from_string(buffer.str());
}

} // namespace tvcycles
