#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace ttstn {

using Alias = std::uint8_t;

inline constexpr Alias kBroadcastAlias = 0;
inline constexpr Alias kFirstNodeAlias = 1;
inline constexpr Alias kLastNodeAlias = 250;
// Reserved alias used for the master's own IFS; printed as "M" in traces.
inline constexpr Alias kMasterAlias = 255;

inline constexpr int kMaxFiles = 64;
inline constexpr int kMaxRecords = 256;
inline constexpr std::size_t kRecordBytes = 4;

using Record = std::array<std::uint8_t, kRecordBytes>;

inline bool is_node_alias(int alias) { return alias >= kFirstNodeAlias && alias <= kLastNodeAlias; }

// cluster(8) | alias(8) | file(6) | record(8), packed into the low 30 bits.
struct IfsAddress {
    std::uint8_t cluster = 0;
    std::uint8_t alias = 0;
    std::uint8_t file = 0;
    std::uint8_t record = 0;

    friend auto operator<=>(const IfsAddress&, const IfsAddress&) = default;
};

std::uint32_t encode_address(const IfsAddress& address);
IfsAddress decode_address(std::uint32_t packed);

// Checked construction from wide integers (config parsing, CLI).
IfsAddress make_address(int cluster, int alias, int file, int record);

std::string to_string(const IfsAddress& address);

std::uint32_t record_to_u32(const Record& record);
Record u32_to_record(std::uint32_t value);

// 64-bit physical name; series keys the electronic datasheet.
struct PhysicalName {
    std::uint32_t series = 0;
    std::uint32_t serial = 0;

    std::uint64_t value() const { return (std::uint64_t{series} << 32) | serial; }
    static PhysicalName from_value(std::uint64_t v)
    {
        return {static_cast<std::uint32_t>(v >> 32), static_cast<std::uint32_t>(v)};
    }
    // MSB-first: bit 0 is the top bit of the series.
    bool bit(int index) const { return (value() >> (63 - index)) & 1u; }

    friend auto operator<=>(const PhysicalName&, const PhysicalName&) = default;
};

std::string to_string(const PhysicalName& name);

// View classification of a record range; storage is uniform.
enum class Section { RS, DM, CP };

std::string_view to_string(Section section);
Section parse_section(std::string_view text);

namespace sysfile {
// Always present in every node.
inline constexpr std::uint8_t kConfiguration = 0;
inline constexpr std::uint8_t kDocumentation = 1;
inline constexpr std::uint8_t kMembership = 2;
inline constexpr std::uint8_t kFirstApplicationFile = 3;

inline constexpr int kConfigurationRecords = 64;
inline constexpr int kDocumentationRecords = 4;
inline constexpr int kMembershipRecords = 8;

// Documentation file.
inline constexpr std::uint8_t kSeriesRecord = 0;
inline constexpr std::uint8_t kSerialRecord = 1;

// Membership/status file.
inline constexpr std::uint8_t kStatusRecord = 0;        // [flags, decode errors, framing errors, ms errors]
inline constexpr std::uint8_t kStatusBaptized = 0x01;    // status flags
inline constexpr std::uint8_t kStatusConfigured = 0x02;
inline constexpr std::uint8_t kSearchHighRecord = 1;    // baptize search register, name bits 0..31
inline constexpr std::uint8_t kSearchLowRecord = 2;     // name bits 32..63
inline constexpr std::uint8_t kAssignRecord = 4;        // [alias, 0, 0, 0] assigns to the node named by the search register
}  // namespace sysfile

class InterfaceFileSystem;

// A locally bound action; runs inside the caller's step with access to the owning IFS.
using ExecuteAction = std::function<std::uint32_t(InterfaceFileSystem&)>;

class IfsFile {
public:
    IfsFile(std::uint8_t name, int record_count, Section section);

    std::uint8_t name() const { return name_; }
    std::size_t size() const { return records_.size(); }

    const Record& at(std::size_t index) const { return records_.at(index); }
    Record& at(std::size_t index) { return records_.at(index); }

    Section section(std::size_t index) const { return sections_.at(index); }
    void set_section(std::size_t first, std::size_t count, Section section);

private:
    std::uint8_t name_;
    std::vector<Record> records_;
    std::vector<Section> sections_;
};

struct FileLayout {
    std::uint8_t name = 0;
    int records = 1;
    Section section = Section::RS;
};

class InterfaceFileSystem {
public:
    InterfaceFileSystem();
    explicit InterfaceFileSystem(const PhysicalName& name);

    // Creates an application file. Files are created once, before the node runs;
    // re-creating an existing name fails with FileImmutable.
    IfsFile& add_file(const FileLayout& layout);

    bool has_file(std::uint8_t file) const { return files_.count(file) != 0; }
    bool has_record(std::uint8_t file, int record) const;
    const IfsFile& file(std::uint8_t file) const;
    std::size_t file_count() const { return files_.size(); }
    std::vector<FileLayout> layout() const;

    Record pull(std::uint8_t file, int record) const;
    void push(std::uint8_t file, int record, std::span<const std::uint8_t> bytes);
    void push(std::uint8_t file, int record, const Record& bytes) { push(file, record, std::span<const std::uint8_t>(bytes)); }
    void push_byte(std::uint8_t file, int record, std::size_t index, std::uint8_t value);

    void bind_execute(std::uint8_t file, int record, ExecuteAction action);
    bool is_executable(std::uint8_t file, int record) const;
    std::uint32_t execute(std::uint8_t file, int record);

private:
    IfsFile& file_mut(std::uint8_t file);
    void check(std::uint8_t file, int record) const;

    std::map<std::uint8_t, IfsFile> files_;
    std::map<std::pair<std::uint8_t, int>, ExecuteAction> bindings_;
};

}  // namespace ttstn
