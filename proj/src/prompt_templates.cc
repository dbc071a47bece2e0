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

#include "dupaudit/prompt_templates.h"

namespace dupaudit::prompts {

const std::string_view kMbppAnnotationTemplate = R"PROMPT(You are an expert programmer analyzing potential semantic duplicates between coding tasks.

## Task
Determine if the following two coding tasks are semantic duplicates - meaning they describe the same programming task, just potentially phrased differently.

## Test Task (from benchmark):
{test_text}

## Corpus Task (from training data):
{corpus_text}

## Guidelines:
1. **Focus on the TASK, not the solution** - ignore any code or solutions that may be present
2. **Mathematical equivalence counts as duplicate** - e.g., "sum 1 to n" and "sum n, n-1, ..., 1" are equivalent
3. **Corpus subsumes test = duplicate** - if the corpus task is strictly harder (asks for more), but solving it would trivially solve the test task, mark as duplicate
4. **Be calibrated** - use confidence primarily for ambiguous cases, tricky phrasing, or when you're uncertain

## Match Types:
- "exact": Nearly identical wording
- "equivalent": Different phrasing, same underlying task
- "subset": Test task is a subset of corpus task (corpus is harder but solves test)
- "superset": Corpus task is a subset of test task (test is harder) - NOT a duplicate
- "unrelated": Different tasks entirely

Analyze the tasks and provide your structured judgment.)PROMPT";

const std::string_view kCodeforcesAnnotationTemplate = R"PROMPT(You are an expert competitive programmer analyzing potential semantic duplicates between programming problems.

## Task
Determine if the following two competitive programming problems are semantically related - meaning exposure to the corpus problem during training could help solve the test problem.

## Test Problem (from benchmark):
{test_text}

## Corpus Problem (from training data):
{corpus_text}

## Analysis Steps:
1. **Check data quality first**: Is the corpus text a complete problem statement? If it's empty, fragmentary, or contains only code without a problem description, mark as "unrelated".
2. **Check for exact text match**: If the corpus text appears VERBATIM (word-for-word) within the test text (e.g., corpus contains just the problem statement while test contains problem + examples), this counts as "exact" match.
3. **Extract the core problem**: Strip away story/narrative framing. What is the actual computational task?
4. **Identify the key insight**: What algorithmic technique or observation is needed?
5. **Compare**: Is there meaningful overlap in what's being asked or how to solve it?

## Match Types:
- "exact": Nearly identical problem statements, OR corpus text is a verbatim substring/subsection of test text (exact text match even if corpus is shorter)
- "equivalent": Different framing but identical algorithmic core
- "subset": Test is a special case of corpus (test asks for less than corpus)
- "superset": Corpus asks for something simpler than test, but NOT a verbatim text match
- "related": Corpus covers a component or shares key insight with test
- "unrelated": Different problems, or corpus data is unusable

## IMPORTANT: Exact Match Clarification
If the corpus text is an exact substring of the test text (the corpus text appears word-for-word inside the test text, just without some sections like examples or input/output format), mark this as "exact" NOT "superset". The key distinction:
- "exact": Corpus text IS CONTAINED VERBATIM in test text
- "superset": Corpus asks a DIFFERENT (simpler) question than test

## What counts as semantically related:
- Same computational task (any framing)
- One is a special case of the other
- Shared key insight or trick
- Corpus solves a significant component of test

## What is unrelated:
- Sharing only common techniques (DP, BFS) without structural similarity
- Unusable corpus data (empty, fragmentary, code-only)
- Genuinely different computational questions)PROMPT";

const std::string_view kMbppParaphraseTemplate = R"PROMPT(You are an expert at paraphrasing programming task descriptions.

ORIGINAL TASK:
{text}

YOUR TASK:
Generate exactly 5 DISTINCT paraphrases of this programming task. Each paraphrase must:
1. Have COMPLETELY DIFFERENT wording from the others
2. Preserve the EXACT same meaning and requirements
3. Maintain the same level of technical detail and clarity
4. Keep any mentioned function names UNCHANGED

CRITICAL: Each paraphrase must be noticeably different from the others. Vary:
- Sentence structure (active vs passive, questions vs statements)
- Vocabulary choices (synonyms, different technical terms)
- Order of information presented
- Level of formality

AVOID:
- Starting multiple paraphrases the same way (e.g., don't start 3 with "Write a...")
- Simply swapping one or two words while keeping structure identical
- Adding or removing requirements not in the original
- Changing the programming language if one is specified
- Making the task ambiguous or less precise

Output EXACTLY in this JSON format (no extra text, no markdown):
{
  "para1": "first paraphrase here",
  "para2": "second paraphrase here",
  "para3": "third paraphrase here",
  "para4": "fourth paraphrase here",
  "para5": "fifth paraphrase here"
}

Generate the 5 diverse paraphrases now:)PROMPT";

const std::string_view kZebraParaphraseSystem = R"PROMPT(You are an expert editor tasked with rewriting logic grid puzzles while exactly preserving the logical structure and semantics.)PROMPT";

const std::string_view kZebraParaphraseUser = R"PROMPT(Rewrite the following logic puzzle to express the exact same conditions in different words or with different word order etc. while exactly preserving the logical structure and semantics.

Original Puzzle:
{puzzle}

REQUIREMENTS:
1. Reformulate both the task description and every numbered condition.
2. You may change word order, use synonyms, and alter sentence structure.
3. PRESERVE the strict logical meaning. For example, "A is next to B" must remain logically equivalent (e.g., "B is adjacent to A").
4. PRESERVE all entity names, values, numbers, and categories EXACTLY. Do not change "Red" to "Crimson" or "John" to "Jon". The specific terms used for the puzzle items MUST remain identical to match the solution exactly.
5. The output must be natural, clear, and readable. Avoid contrived or unnatural constructions.
6. Maintain the formatting of the puzzle, including the format and numbering of the list of clues.
7. Do not start your response with a header or a preamble. Start with a naturally flowing puzzle statement in a very similar style and format as the original.

Output ONLY the rewritten puzzle text.)PROMPT";

const std::string_view kSubstitutionPlanSystem = R"PROMPT(You are a helpful assistant that creates substitution plans for logic puzzles.
Your goal is to transform the puzzle by changing BOTH the categories and their values to new domains.)PROMPT";

const std::string_view kSubstitutionPlanUser = R"PROMPT(Create a substitution plan to transform this logic grid puzzle.
1. Identify all categories (e.g., Color, Drink, Pet).
2. Assign a NEW category to each (e.g., Color -> Shape, Drink -> Snack, Pet -> Book).
3. Map every existing value to a new value appropriate for the new category.

Original Puzzle:
{puzzle}

Original Solution:
{solution_json}

REQUIREMENTS:
1. Change the categories to natural, distinct alternatives (e.g., colors -> shapes, flowers -> animals).
2. Keep the new categories and values DISTINCT from all of the original ones. Avoid number categories (to avoid confusion with the numbering of the puzzle).
3. Ensure 1-to-1 mapping for all values.
4. Do NOT use obscure or unusual categories. Stick to common categories like colors, animals, shapes, countries, etc. Choose natural categories and values within the flow of the puzzle wording.

Output ONLY a JSON object with this structure:
{
  "substitution_plan": {
    "OriginalCategoryName": {
      "new_category": "NewCategoryName",
      "values": {
        "OldValue1": "NewValue1",
        "OldValue2": "NewValue2"
      }
    },
    ...
  }
})PROMPT";

const std::string_view kSubstitutionApplySystem = R"PROMPT(You are a helpful assistant that rewrites logic puzzles based on a substitution plan.
You must replace categories and values exactly according to the plan while PRESERVING the puzzle structure, logic, and clues EXACTLY.)PROMPT";

const std::string_view kSubstitutionApplyUser = R"PROMPT(Rewrite this logic puzzle by applying the following substitution plan.
Replace ALL occurrences of the old categories and values with their corresponding new ones.

Substitution Plan:
{plan_json}

Original Puzzle:
{puzzle}

CRITICAL INSTRUCTIONS:
1. Replace old categories (e.g., "Color") with new categories (e.g., "Shape").
2. Replace old values (e.g., "Red") with new values (e.g., "Square").
3. Do NOT change the logic, clues, or structure.
4. Keep the puzzle wording identical as much as possible, only make minor syntactic adjustments where necessary to preserve the flow and meaning of the puzzle wording.
5. Keep the numbering and formatting identical.
6. Output ONLY the rewritten puzzle text.)PROMPT";

}  // namespace dupaudit::prompts
