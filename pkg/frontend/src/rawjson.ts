/**
 * JSON parsing that preserves the source lexeme of every number.
 *
 * The review dashboard must show metric values byte-for-byte as the backend
 * exported them. Re-serializing a parsed double can change the digits (e.g.
 * "1e-05" vs "0.00001"), so the renderer works from these raw lexemes instead
 * of ever formatting a number itself.
 */

export type RawValue =
  | { kind: "object"; entries: Map<string, RawValue> }
  | { kind: "array"; items: RawValue[] }
  | { kind: "string"; value: string }
  | { kind: "number"; value: number; raw: string }
  | { kind: "bool"; value: boolean }
  | { kind: "null" };

class Parser {
  private pos = 0;

  constructor(private readonly text: string) {}

  parse(): RawValue {
    const value = this.value();
    this.ws();
    if (this.pos !== this.text.length) {
      throw new SyntaxError(`trailing content at offset ${this.pos}`);
    }
    return value;
  }

  private ws(): void {
    while (this.pos < this.text.length &&
           " \t\n\r".includes(this.text[this.pos])) {
      this.pos += 1;
    }
  }

  private peek(): string {
    if (this.pos >= this.text.length) {
      throw new SyntaxError("unexpected end of input");
    }
    return this.text[this.pos];
  }

  private expect(ch: string): void {
    if (this.text[this.pos] !== ch) {
      throw new SyntaxError(`expected ${ch} at offset ${this.pos}`);
    }
    this.pos += 1;
  }

  private value(): RawValue {
    this.ws();
    const ch = this.peek();
    if (ch === "{") return this.object();
    if (ch === "[") return this.array();
    if (ch === '"') return { kind: "string", value: this.string() };
    if (this.text.startsWith("true", this.pos)) {
      this.pos += 4;
      return { kind: "bool", value: true };
    }
    if (this.text.startsWith("false", this.pos)) {
      this.pos += 5;
      return { kind: "bool", value: false };
    }
    if (this.text.startsWith("null", this.pos)) {
      this.pos += 4;
      return { kind: "null" };
    }
    return this.number();
  }

  private object(): RawValue {
    this.expect("{");
    const entries = new Map<string, RawValue>();
    this.ws();
    if (this.peek() === "}") {
      this.pos += 1;
      return { kind: "object", entries };
    }
    for (;;) {
      this.ws();
      const key = this.string();
      this.ws();
      this.expect(":");
      entries.set(key, this.value());
      this.ws();
      if (this.peek() === ",") {
        this.pos += 1;
        continue;
      }
      this.expect("}");
      return { kind: "object", entries };
    }
  }

  private array(): RawValue {
    this.expect("[");
    const items: RawValue[] = [];
    this.ws();
    if (this.peek() === "]") {
      this.pos += 1;
      return { kind: "array", items };
    }
    for (;;) {
      items.push(this.value());
      this.ws();
      if (this.peek() === ",") {
        this.pos += 1;
        continue;
      }
      this.expect("]");
      return { kind: "array", items };
    }
  }

  private string(): string {
    this.expect('"');
    let out = "";
    for (;;) {
      const ch = this.peek();
      this.pos += 1;
      if (ch === '"') {
        return out;
      }
      if (ch !== "\\") {
        out += ch;
        continue;
      }
      const esc = this.peek();
      this.pos += 1;
      switch (esc) {
        case '"': out += '"'; break;
        case "\\": out += "\\"; break;
        case "/": out += "/"; break;
        case "b": out += "\b"; break;
        case "f": out += "\f"; break;
        case "n": out += "\n"; break;
        case "r": out += "\r"; break;
        case "t": out += "\t"; break;
        case "u": {
          const hex = this.text.slice(this.pos, this.pos + 4);
          this.pos += 4;
          out += String.fromCharCode(parseInt(hex, 16));
          break;
        }
        default:
          throw new SyntaxError(`bad escape \\${esc}`);
      }
    }
  }

  private number(): RawValue {
    const start = this.pos;
    const rest = this.text.slice(this.pos);
    const match = /^-?(?:0|[1-9]\d*)(?:\.\d+)?(?:[eE][+-]?\d+)?/.exec(rest);
    if (!match) {
      throw new SyntaxError(`invalid value at offset ${this.pos}`);
    }
    this.pos += match[0].length;
    return {
      kind: "number",
      value: Number(match[0]),
      raw: this.text.slice(start, this.pos),
    };
  }
}

export function parseRaw(text: string): RawValue {
  return new Parser(text).parse();
}

/** Walk object keys / array indices; throws when the path is absent. */
export function at(value: RawValue, ...path: (string | number)[]): RawValue {
  let node = value;
  for (const step of path) {
    if (typeof step === "string") {
      if (node.kind !== "object" || !node.entries.has(step)) {
        throw new Error(`missing key ${step}`);
      }
      node = node.entries.get(step)!;
    } else {
      if (node.kind !== "array" || step >= node.items.length) {
        throw new Error(`missing index ${step}`);
      }
      node = node.items[step];
    }
  }
  return node;
}

/** Source lexeme of a number node, exactly as the backend wrote it. */
export function rawNumber(value: RawValue, ...path: (string | number)[]): string {
  const node = at(value, ...path);
  if (node.kind !== "number") {
    throw new Error(`expected a number at ${path.join(".")}`);
  }
  return node.raw;
}

export function asString(value: RawValue, ...path: (string | number)[]): string {
  const node = at(value, ...path);
  if (node.kind !== "string") {
    throw new Error(`expected a string at ${path.join(".")}`);
  }
  return node.value;
}

export function keysOf(value: RawValue, ...path: (string | number)[]): string[] {
  const node = at(value, ...path);
  if (node.kind !== "object") {
    throw new Error(`expected an object at ${path.join(".")}`);
  }
  return [...node.entries.keys()];
}

export function itemsOf(value: RawValue, ...path: (string | number)[]): RawValue[] {
  const node = at(value, ...path);
  if (node.kind !== "array") {
    throw new Error(`expected an array at ${path.join(".")}`);
  }
  return node.items;
}

export function has(value: RawValue, ...path: (string | number)[]): boolean {
  try {
    at(value, ...path);
    return true;
  } catch {
    return false;
  }
}
