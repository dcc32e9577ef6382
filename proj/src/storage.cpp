#include "wpki/storage.hpp"

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <system_error>

#include "wpki/codec.hpp"

namespace wpki::storage {

namespace fs = std::filesystem;

Result<void> ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) return Error{Err::storage_failure, dir.string() + ": " + ec.message()};
    return {};
}

bool exists(const fs::path& path) {
    std::error_code ec;
    return fs::exists(path, ec);
}

Result<void> atomic_write(const fs::path& path, BytesView data) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) return Error{Err::storage_failure, "cannot open " + tmp.string()};
        out.write(reinterpret_cast<const char*>(data.data()),
                  static_cast<std::streamsize>(data.size()));
        out.flush();
        if (!out) return Error{Err::storage_failure, "short write to " + tmp.string()};
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        return Error{Err::storage_failure, "rename to " + path.string() + " failed"};
    }
    return {};
}

Result<Bytes> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        if (!storage::exists(path)) return Error{Err::not_found, path.string()};
        return Error{Err::storage_failure, "cannot open " + path.string()};
    }
    Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) return Error{Err::storage_failure, "read error on " + path.string()};
    return data;
}

Result<void> append_record(const fs::path& path, std::uint8_t kind, BytesView payload) {
    WPKI_TRY(framed, codec::frame(kind, payload));
    std::FILE* f = std::fopen(path.c_str(), "ab");
    if (!f) return Error{Err::storage_failure, "cannot open " + path.string()};
    std::size_t written = std::fwrite(framed.data(), 1, framed.size(), f);
    bool flushed = std::fflush(f) == 0;
    std::fclose(f);
    if (written != framed.size() || !flushed)
        return Error{Err::storage_failure, "short append to " + path.string()};
    return {};
}

Result<std::vector<std::pair<std::uint8_t, Bytes>>> read_records(const fs::path& path) {
    std::vector<std::pair<std::uint8_t, Bytes>> out;
    if (!storage::exists(path)) return out;  // no records yet
    WPKI_TRY(data, read_file(path));
    codec::MemorySource src(data);
    while (src.consumed() < data.size()) {
        auto frame = codec::deframe(src);
        if (!frame.ok())
            return Error{Err::corrupt_state, path.string() + ": " + frame.error().detail};
        out.emplace_back(frame->kind, std::move(frame->payload));
    }
    return out;
}

// key file: tag 0x08 (curve byte + compressed point), tag 0x60 (scalar)
Result<void> save_keypair(const fs::path& path, const crypto::KeyPair& key) {
    Bytes record;
    Bytes pub{key.curve_id};
    append(pub, key.public_key);
    record.push_back(0x08);
    put_u16_be(record, static_cast<std::uint16_t>(pub.size()));
    append(record, pub);
    record.push_back(0x60);
    put_u16_be(record, static_cast<std::uint16_t>(key.private_key.size()));
    append(record, key.private_key);
    return atomic_write(path, record);
}

Result<crypto::KeyPair> load_keypair(const fs::path& path) {
    WPKI_TRY(data, read_file(path));
    crypto::KeyPair key;
    std::size_t pos = 0;
    while (pos < data.size()) {
        if (data.size() - pos < 3) return Error{Err::corrupt_state, "truncated key file"};
        std::uint8_t tag = data[pos];
        std::uint16_t len = get_u16_be(data.data() + pos + 1);
        pos += 3;
        if (data.size() - pos < len) return Error{Err::corrupt_state, "key file overrun"};
        BytesView value(data.data() + pos, len);
        if (tag == 0x08 && len >= 2) {
            key.curve_id = value[0];
            key.public_key = copy_bytes(value.subspan(1));
        } else if (tag == 0x60) {
            key.private_key = copy_bytes(value);
        }
        pos += len;
    }
    if (key.curve_id == 0 || key.public_key.empty() || key.private_key.empty())
        return Error{Err::corrupt_state, "incomplete key file"};
    auto rederived = crypto::rederive_public(key.curve_id, key.private_key);
    if (!rederived.ok() || rederived.value() != key.public_key)
        return Error{Err::corrupt_state, "key file fails re-derivation"};
    return key;
}

}  // namespace wpki::storage
