export type Messages = Record<string, string>;

/**
 * Looks up `key` and fills `{name}` placeholders. A missing key renders as
 * the key itself so gaps are visible rather than silently hard-coded.
 */
export function t(messages: Messages, key: string, params: Iterable<[string, string]> = []): string {
  let text = messages[key] ?? key;
  for (const [name, value] of params) {
    text = text.split(`{${name}}`).join(value);
  }
  return text;
}
