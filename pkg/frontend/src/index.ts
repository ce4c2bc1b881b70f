export {
  BadNumberError,
  CsvError,
  EmptyCsvError,
  MissingColumnError,
  parseCsv,
} from "./csv";
export type { Table } from "./csv";
export { render, renderConvergence, renderSweep, UnknownKindError } from "./render";
export type { PlotSpec } from "./render";
