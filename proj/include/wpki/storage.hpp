#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "wpki/bytes.hpp"
#include "wpki/crypto.hpp"
#include "wpki/result.hpp"

namespace wpki::storage {

Result<void> ensure_dir(const std::filesystem::path& dir);

bool exists(const std::filesystem::path& path);

// Write-to-temp-then-rename; readers never observe a torn file.
Result<void> atomic_write(const std::filesystem::path& path, BytesView data);

Result<Bytes> read_file(const std::filesystem::path& path);  // not_found / storage_failure

// Appends one framed record in a single write call.
Result<void> append_record(const std::filesystem::path& path, std::uint8_t kind, BytesView payload);

// Replays a record file. A truncated or garbled tail is corrupt_state.
Result<std::vector<std::pair<std::uint8_t, Bytes>>> read_records(const std::filesystem::path& path);

// Keypair-at-rest format shared by the services' state directories. Load
// re-derives the public half and rejects mismatches as corrupt_state.
Result<void> save_keypair(const std::filesystem::path& path, const crypto::KeyPair& key);
Result<crypto::KeyPair> load_keypair(const std::filesystem::path& path);

}  // namespace wpki::storage
