/** Error hierarchy for the bench plotter. */

export class PlotterError extends Error {
  constructor(message: string) {
    super(message);
    this.name = new.target.name;
  }
}

/** The input CSV's header does not match the benchmark schema. */
export class SchemaMismatch extends PlotterError {}

/** The input CSV parses but contains no data rows. */
export class MissingData extends PlotterError {}

/** The input CSV path does not exist. */
export class MissingFile extends PlotterError {}
