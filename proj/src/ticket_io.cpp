#include "ticketlab/ticket_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace ticketlab {

namespace {

constexpr char kMagic[4] = {'T', 'K', 'T', 'B'};
constexpr uint32_t kVersion = 1;

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double d) {
    put_u64(out, std::bit_cast<uint64_t>(d));
}

struct Reader {
    std::string_view data;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > data.size()) throw DataError("ticket file truncated");
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<uint32_t>(static_cast<unsigned char>(data[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<uint64_t>(static_cast<unsigned char>(data[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
};

}  // namespace

std::string serialize_ticket(const Ticket& ticket) {
    const int L = ticket.arch.n_layers();
    std::string out;
    out.append(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<uint32_t>(L));
    put_u64(out, ticket.seed);
    for (int l = 0; l < L; ++l) {
        put_u32(out, static_cast<uint32_t>(ticket.arch.layer_rows(l)));
        put_u32(out, static_cast<uint32_t>(ticket.arch.layer_cols(l)));
    }
    for (int l = 0; l < L; ++l) {
        const auto& m = ticket.mask.layers[static_cast<std::size_t>(l)];
        uint8_t byte = 0;
        for (std::size_t k = 0; k < m.size(); ++k) {
            if (m[k]) byte |= static_cast<uint8_t>(1u << (k % 8));
            if (k % 8 == 7) {
                out.push_back(static_cast<char>(byte));
                byte = 0;
            }
        }
        if (m.size() % 8 != 0) out.push_back(static_cast<char>(byte));
    }
    for (int l = 0; l < L; ++l) {
        for (double w : ticket.weights_init[static_cast<std::size_t>(l)]) put_f64(out, w);
        for (double b : ticket.biases_init[static_cast<std::size_t>(l)]) put_f64(out, b);
    }
    return out;
}

Ticket deserialize_ticket(std::string_view bytes) {
    Reader r{bytes};
    r.need(4);
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw DataError("not a ticket file (bad magic)");
    r.pos = 4;
    const uint32_t version = r.u32();
    if (version != kVersion)
        throw DataError("unsupported ticket version " + std::to_string(version));
    const uint32_t L = r.u32();
    if (L < 2 || L > 64) throw DataError("implausible layer count in ticket");

    Ticket t;
    t.seed = r.u64();
    std::vector<std::pair<uint32_t, uint32_t>> dims;
    for (uint32_t l = 0; l < L; ++l) {
        const uint32_t rows = r.u32();
        const uint32_t cols = r.u32();
        dims.emplace_back(rows, cols);
    }
    if (dims.front().first != 1) throw DataError("ticket input layer must have fan-in 1");
    t.arch.hidden.clear();
    for (uint32_t l = 0; l + 1 < L; ++l) {
        t.arch.hidden.push_back(static_cast<int>(dims[l].second));
        if (dims[l + 1].first != dims[l].second)
            throw DataError("ticket layer dims do not chain");
    }
    t.arch.output_dim = static_cast<int>(dims.back().second);

    for (uint32_t l = 0; l < L; ++l) {
        const std::size_t n = static_cast<std::size_t>(dims[l].first) * dims[l].second;
        std::vector<uint8_t> mask(n);
        const std::size_t nbytes = (n + 7) / 8;
        r.need(nbytes);
        for (std::size_t k = 0; k < n; ++k) {
            const auto byte = static_cast<unsigned char>(bytes[r.pos + k / 8]);
            mask[k] = (byte >> (k % 8)) & 1u;
        }
        r.pos += nbytes;
        t.mask.layers.push_back(std::move(mask));
    }
    for (uint32_t l = 0; l < L; ++l) {
        const std::size_t n = static_cast<std::size_t>(dims[l].first) * dims[l].second;
        std::vector<double> w(n);
        for (auto& x : w) x = r.f64();
        std::vector<double> b(dims[l].second);
        for (auto& x : b) x = r.f64();
        t.weights_init.push_back(std::move(w));
        t.biases_init.push_back(std::move(b));
    }
    if (r.pos != bytes.size()) throw DataError("trailing bytes in ticket file");
    return t;
}

void atomic_write(const std::filesystem::path& path, std::string_view contents) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot open for writing: " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw DataError("short write: " + tmp.string());
    }
    fs::rename(tmp, path);
}

void save_ticket(const std::filesystem::path& path, const Ticket& ticket) {
    atomic_write(path, serialize_ticket(ticket));
}

Ticket load_ticket(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open ticket file: " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_ticket(bytes);
}

}  // namespace ticketlab
