#pragma once

namespace guot {

inline constexpr const char* kLibraryName = "guot";
inline constexpr const char* kLibraryVersion = "0.1.0";
inline constexpr int kReportSchemaVersion = 1;

}  // namespace guot
