#include "ttstn/ifs.hpp"

#include "ttstn/error.hpp"

#include <cstdio>

namespace ttstn {

std::uint32_t encode_address(const IfsAddress& a)
{
    if (a.file >= kMaxFiles)
        throw Error(ErrorCode::Range, "file index out of range: " + std::to_string(a.file));
    return (std::uint32_t{a.cluster} << 22) | (std::uint32_t{a.alias} << 14) |
           (std::uint32_t{a.file} << 8) | std::uint32_t{a.record};
}

IfsAddress decode_address(std::uint32_t packed)
{
    if (packed >> 30)
        throw Error(ErrorCode::MalformedAddress, "reserved address bits set");
    IfsAddress a;
    a.cluster = static_cast<std::uint8_t>(packed >> 22);
    a.alias = static_cast<std::uint8_t>(packed >> 14);
    a.file = static_cast<std::uint8_t>((packed >> 8) & 0x3F);
    a.record = static_cast<std::uint8_t>(packed);
    return a;
}

IfsAddress make_address(int cluster, int alias, int file, int record)
{
    auto in = [](int v, int hi) { return v >= 0 && v <= hi; };
    if (!in(cluster, 255) || !in(alias, 255) || !in(file, kMaxFiles - 1) || !in(record, kMaxRecords - 1))
        throw Error(ErrorCode::Range, "address field out of range");
    return {static_cast<std::uint8_t>(cluster), static_cast<std::uint8_t>(alias),
            static_cast<std::uint8_t>(file), static_cast<std::uint8_t>(record)};
}

std::string to_string(const IfsAddress& a)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%u.%u.%u.%u", a.cluster, a.alias, a.file, a.record);
    return buf;
}

std::uint32_t record_to_u32(const Record& r)
{
    return (std::uint32_t{r[0]} << 24) | (std::uint32_t{r[1]} << 16) | (std::uint32_t{r[2]} << 8) | r[3];
}

Record u32_to_record(std::uint32_t v)
{
    return {static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16),
            static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
}

std::string to_string(const PhysicalName& name)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%08X:%08X", name.series, name.serial);
    return buf;
}

std::string_view to_string(Section section)
{
    switch (section) {
    case Section::RS: return "RS";
    case Section::DM: return "DM";
    case Section::CP: return "CP";
    }
    return "?";
}

Section parse_section(std::string_view text)
{
    if (text == "RS") return Section::RS;
    if (text == "DM") return Section::DM;
    if (text == "CP") return Section::CP;
    throw Error(ErrorCode::Parse, "unknown section '" + std::string(text) + "'");
}

IfsFile::IfsFile(std::uint8_t name, int record_count, Section section)
    : name_(name)
{
    if (name >= kMaxFiles)
        throw Error(ErrorCode::Range, "file name out of range: " + std::to_string(name));
    if (record_count < 1 || record_count > kMaxRecords)
        throw Error(ErrorCode::Range, "record count out of range: " + std::to_string(record_count));
    records_.assign(static_cast<std::size_t>(record_count), Record{});
    sections_.assign(static_cast<std::size_t>(record_count), section);
}

void IfsFile::set_section(std::size_t first, std::size_t count, Section section)
{
    if (first + count > sections_.size())
        throw Error(ErrorCode::Address, "section range exceeds file");
    for (std::size_t i = first; i < first + count; ++i)
        sections_[i] = section;
}

InterfaceFileSystem::InterfaceFileSystem()
{
    files_.emplace(sysfile::kConfiguration, IfsFile(sysfile::kConfiguration, sysfile::kConfigurationRecords, Section::CP));
    files_.emplace(sysfile::kDocumentation, IfsFile(sysfile::kDocumentation, sysfile::kDocumentationRecords, Section::CP));
    files_.emplace(sysfile::kMembership, IfsFile(sysfile::kMembership, sysfile::kMembershipRecords, Section::DM));
}

InterfaceFileSystem::InterfaceFileSystem(const PhysicalName& name)
    : InterfaceFileSystem()
{
    push(sysfile::kDocumentation, sysfile::kSeriesRecord, u32_to_record(name.series));
    push(sysfile::kDocumentation, sysfile::kSerialRecord, u32_to_record(name.serial));
}

IfsFile& InterfaceFileSystem::add_file(const FileLayout& layout)
{
    if (layout.name >= kMaxFiles)
        throw Error(ErrorCode::Range, "file name out of range: " + std::to_string(layout.name));
    if (files_.count(layout.name))
        throw Error(ErrorCode::FileImmutable, "file " + std::to_string(layout.name) + " already exists");
    auto [it, _] = files_.emplace(layout.name, IfsFile(layout.name, layout.records, layout.section));
    return it->second;
}

bool InterfaceFileSystem::has_record(std::uint8_t file, int record) const
{
    auto it = files_.find(file);
    return it != files_.end() && record >= 0 && static_cast<std::size_t>(record) < it->second.size();
}

void InterfaceFileSystem::check(std::uint8_t file, int record) const
{
    auto it = files_.find(file);
    if (it == files_.end())
        throw Error(ErrorCode::Address, "no file " + std::to_string(file));
    if (record < 0 || static_cast<std::size_t>(record) >= it->second.size())
        throw Error(ErrorCode::Address,
                    "record " + std::to_string(record) + " out of range for file " + std::to_string(file));
}

const IfsFile& InterfaceFileSystem::file(std::uint8_t file) const
{
    auto it = files_.find(file);
    if (it == files_.end())
        throw Error(ErrorCode::Address, "no file " + std::to_string(file));
    return it->second;
}

IfsFile& InterfaceFileSystem::file_mut(std::uint8_t file)
{
    auto it = files_.find(file);
    if (it == files_.end())
        throw Error(ErrorCode::Address, "no file " + std::to_string(file));
    return it->second;
}

std::vector<FileLayout> InterfaceFileSystem::layout() const
{
    std::vector<FileLayout> out;
    for (const auto& [name, f] : files_)
        out.push_back({name, static_cast<int>(f.size()), f.section(0)});
    return out;
}

Record InterfaceFileSystem::pull(std::uint8_t file, int record) const
{
    check(file, record);
    return files_.at(file).at(static_cast<std::size_t>(record));
}

void InterfaceFileSystem::push(std::uint8_t file, int record, std::span<const std::uint8_t> bytes)
{
    check(file, record);
    if (bytes.size() != kRecordBytes)
        throw Error(ErrorCode::Size, "record push needs 4 bytes, got " + std::to_string(bytes.size()));
    Record& r = file_mut(file).at(static_cast<std::size_t>(record));
    std::copy(bytes.begin(), bytes.end(), r.begin());
}

void InterfaceFileSystem::push_byte(std::uint8_t file, int record, std::size_t index, std::uint8_t value)
{
    check(file, record);
    if (index >= kRecordBytes)
        throw Error(ErrorCode::Size, "byte index out of record");
    file_mut(file).at(static_cast<std::size_t>(record))[index] = value;
}

void InterfaceFileSystem::bind_execute(std::uint8_t file, int record, ExecuteAction action)
{
    check(file, record);
    bindings_[{file, record}] = std::move(action);
}

bool InterfaceFileSystem::is_executable(std::uint8_t file, int record) const
{
    return bindings_.count({file, record}) != 0;
}

std::uint32_t InterfaceFileSystem::execute(std::uint8_t file, int record)
{
    check(file, record);
    auto it = bindings_.find({file, record});
    if (it == bindings_.end())
        throw Error(ErrorCode::NotExecutable,
                    "no execute binding at " + std::to_string(file) + ":" + std::to_string(record));
    return it->second(*this);
}

}  // namespace ttstn
