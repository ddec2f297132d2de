#pragma once

namespace memvqa::detail {

extern const char* const kTemplateVersion;
extern const char* const kTemplate_vanilla_vqa;
extern const char* const kTemplate_direct_memory;
extern const char* const kTemplate_indirect_memory;
extern const char* const kTemplate_memory_vqa;

}  // namespace memvqa::detail
