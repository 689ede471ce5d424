/** Static guidance shown beside every task. */

export const INTENT_GUIDELINE =
  "First decide whether the query is actually asking for a piece of code. " +
  "Questions about concepts, errors, tooling, or opinions have no code-search " +
  "intent; skip the second step for those.";

export const ANSWER_GUIDELINES: string[] = [
  "Label 1 when the code covers everything the query asks for, or goes beyond it.",
  "Label 1 when the code fully handles one recognized variant of the request.",
  "Label 0 when the code covers half or less of what the query asks for.",
  "Label 0 when only a small part of the code relates to the query at all.",
];
