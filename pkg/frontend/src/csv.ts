export type Row = Record<string, string>

/**
 * Minimal CSV reader for the simulator's log files: comma-separated,
 * first line is the header, no quoting or embedded commas.
 */
export function parseCsv(text: string): Row[] {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0)
  if (lines.length === 0) return []
  const header = lines[0].split(',')
  const rows: Row[] = []
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(',')
    if (parts.length !== header.length) {
      throw new Error(`csv row ${i + 1}: expected ${header.length} fields, got ${parts.length}`)
    }
    const row: Row = {}
    for (let j = 0; j < header.length; j++) row[header[j]] = parts[j]
    rows.push(row)
  }
  return rows
}

export function requireColumns(rows: Row[], columns: string[], name: string): void {
  if (rows.length === 0) throw new Error(`${name}: no data rows`)
  for (const col of columns) {
    if (!(col in rows[0])) {
      throw new Error(`${name}: missing column '${col}' (have: ${Object.keys(rows[0]).join(',')})`)
    }
  }
}
