"""CSV, summary.json and report writers for experiment runs."""

import csv
import json
import logging
import math
from pathlib import Path

import markdown
import numpy as np

logger = logging.getLogger(__name__)

SUMMARY_NAME = 'summary.json'
REPORT_NAME = 'report.md'


def format_value(value) -> str:
    """17 significant digits for floats, plain text for everything else."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (float, np.floating)):
        return '%.17g' % value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return ''
    return str(value)


def write_csv(path, header, rows, provenance: dict) -> Path:
    """Comment lines '# key: value', a header row, then the data rows; LF endings."""
    path = Path(path)
    with open(path, 'w', newline='', encoding='utf-8') as f:
        for key, value in provenance.items():
            f.write(f'# {key}: {value}\n')
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(x) for x in row])
    logger.debug('wrote %s (%s rows)', path, len(rows))
    return path


def read_csv(path):
    """(provenance, header, rows) of a file written by write_csv; rows stay text."""
    provenance, lines = {}, []
    with open(path, encoding='utf-8') as f:
        for line in f:
            if line.startswith('#'):
                key, _, value = line[1:].partition(':')
                provenance[key.strip()] = value.strip()
            else:
                lines.append(line)
    table = list(csv.reader(lines))
    return provenance, table[0], table[1:]


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def write_summary(out_dir, summary: dict) -> Path:
    path = Path(out_dir) / SUMMARY_NAME
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(_jsonable(summary), f, indent=2, sort_keys=True)
        f.write('\n')
    return path


def read_summary(out_dir):
    """Existing summary in `out_dir`, or None."""
    path = Path(out_dir) / SUMMARY_NAME
    if not path.exists():
        return None
    with open(path, encoding='utf-8') as f:
        return json.load(f)


def render_markdown(text: str) -> str:
    return markdown.markdown(text, extensions=['tables'])


def write_report(out_dir, lines) -> Path:
    """report.md plus its rendered report.html."""
    out_dir = Path(out_dir)
    text = '\n'.join(lines) + '\n'
    path = out_dir / REPORT_NAME
    path.write_text(text, encoding='utf-8')
    (out_dir / 'report.html').write_text(render_markdown(text), encoding='utf-8')
    return path


def markdown_table(header, rows) -> list:
    lines = ['| ' + ' | '.join(header) + ' |',
             '|' + '---|' * len(header)]
    for row in rows:
        lines.append('| ' + ' | '.join(_short(x) for x in row) + ' |')
    return lines


def _short(value) -> str:
    if isinstance(value, (float, np.floating)):
        return '%.6g' % value
    return format_value(value)
