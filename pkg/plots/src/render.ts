import * as fs from "fs";
import * as path from "path";

import { SchemaError, readCsv } from "./csv";
import { FIGURES, FigureKind } from "./figures";

export interface FigureSpec {
  kind: FigureKind;
  input: string;
  output: string;
}

export function renderSpec(spec: FigureSpec): void {
  const fn = FIGURES[spec.kind];
  if (!fn) {
    throw new SchemaError(
      `unknown figure kind ${JSON.stringify(spec.kind)}; ` +
        `known: ${Object.keys(FIGURES).join(", ")}`);
  }
  if (!spec.input || !spec.output) {
    throw new SchemaError("figure spec needs 'input' and 'output' paths");
  }
  const table = readCsv(spec.input);
  const svg = fn(spec.input, table); // validate and build before touching output
  fs.mkdirSync(path.dirname(path.resolve(spec.output)), { recursive: true });
  fs.writeFileSync(spec.output, svg);
}

export function main(argv: string[]): number {
  const idx = argv.indexOf("--spec");
  if (idx < 0 || idx + 1 >= argv.length) {
    console.error("usage: render --spec <figure-spec.json>");
    return 2;
  }
  const specPath = argv[idx + 1];
  let spec: FigureSpec;
  try {
    spec = JSON.parse(fs.readFileSync(specPath, "utf8"));
  } catch (err) {
    console.error(`cannot read figure spec ${specPath}: ${err}`);
    return 2;
  }
  try {
    renderSpec(spec);
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`render: ${err.message}`);
      return 1;
    }
    throw err;
  }
  console.log(`wrote ${spec.output}`);
  return 0;
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
