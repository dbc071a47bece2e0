// Copyright 2026 The dupaudit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DUPAUDIT_PROMPT_TEMPLATES_H_
#define DUPAUDIT_PROMPT_TEMPLATES_H_

#include <string_view>

// Verbatim judge and generator prompt texts. Slots use {name} syntax.
namespace dupaudit::prompts {

extern const std::string_view kMbppAnnotationTemplate;
extern const std::string_view kCodeforcesAnnotationTemplate;
extern const std::string_view kMbppParaphraseTemplate;
extern const std::string_view kZebraParaphraseSystem;
extern const std::string_view kZebraParaphraseUser;
extern const std::string_view kSubstitutionPlanSystem;
extern const std::string_view kSubstitutionPlanUser;
extern const std::string_view kSubstitutionApplySystem;
extern const std::string_view kSubstitutionApplyUser;

}  // namespace dupaudit::prompts

#endif  // DUPAUDIT_PROMPT_TEMPLATES_H_
